// Temporary debugging harness (removed before release).
use eitchain::dispersion::*;
use eitchain::math::*;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cross_dbg(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn main() {
    // math eigen test case
    let m: Mat3 = [
        [c(0.1, 0.0), c(-0.1, 0.0), c(0.0, 0.0)],
        [c(-0.1, 0.0), c(0.0, -0.005), c(0.02, 0.0)],
        [c(0.0, 0.0), c(0.02, 0.0), c(0.0, 0.0)],
    ];
    {
        let lambda = eigenvalues3(&m)[0];
        let r = [
            [m[0][0] - lambda, m[0][1], m[0][2]],
            [m[1][0], m[1][1] - lambda, m[1][2]],
            [m[2][0], m[2][1], m[2][2] - lambda],
        ];
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let cr = cross_dbg(r[i], r[j]);
            let n2: f64 = cr.iter().map(|z| z.norm_sqr()).sum();
            println!("cross(r{i}, r{j}) = {cr:?} norm2={n2:.3e}");
        }
    }
    for lambda in eigenvalues3(&m) {
        let pv = eigenvector3(&m, lambda);
        println!("lambda = {lambda:?}");
        match pv {
            Some(v) => {
                let mv = matvec3(&m, v);
                for i in 0..3 {
                    println!(
                        "  res[{i}] = {:.3e}  v[{i}] = {:?}",
                        (mv[i] - lambda * v[i]).norm(),
                        v[i]
                    );
                }
            }
            None => println!("  (degenerate)"),
        }
        // char poly residual
        let tr = m[0][0] + m[1][1] + m[2][2];
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0]
            + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2] - m[1][2] * m[2][1];
        let det = det3(&m);
        let p = ((lambda - tr) * lambda + m2) * lambda - det;
        println!("  charpoly residual = {:.3e}", p.norm());
    }

    // dark decay at resonance (Fig. 1)
    let p = EitParams::resonant(0.01, 0.04).with_gamma_e(0.01);
    let pt = polariton_branches(&p, &DispersionSubstitute::default(), 1.0).unwrap();
    println!("\nFig1 at kp:");
    for b in 0..3 {
        println!(
            "  omega[{b}] = {:?} weights = {:?}",
            pt.omega[b], pt.weights[b]
        );
    }
    let vd = branch_velocity_and_decay(&pt, &p);
    println!("  dark (v, gamma) = {:?}", vd[1]);

    // quadratic decay law data
    println!("\ngamma(k) on dark branch:");
    for i in [-10i32, -5, -2, 2, 5, 10] {
        let q = 0.002 * i as f64;
        let pt = polariton_branches(&p, &DispersionSubstitute::default(), 1.0 + q).unwrap();
        let (_, g) = branch_velocity_and_decay(&pt, &p)[1];
        println!(
            "  q={q:+.3}: gamma={g:.6e}  -2Im(omega)={:.6e} ratio={:.4}",
            -2.0 * pt.omega[1].im,
            g / (-2.0 * pt.omega[1].im)
        );
    }
    let want = -curvature_resonance(&p).im;
    println!("  curvature formula: {want:.6e}");
}
