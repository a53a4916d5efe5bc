//! Nelder–Mead on a box, used to polish grid minima.

/// Minimize `f` over `[0,1]^d` starting from `x0`; every trial point is
/// clamped into the box. Returns the best vertex and its value.
pub fn nelder_mead_box(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let clamp = |x: &mut Vec<f64>| x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    simplex.push(start.clone());
    for i in 0..d {
        let mut v = start.clone();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..iterations {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|v| v[k]).sum::<f64>() / d as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..d)
                .map(|k| centroid[k] + coef * (simplex[d][k] - centroid[k]))
                .collect();
            clamp(&mut p);
            p
        };

        let xr = toward(-alpha);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = toward(-gamma);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let (xc, fc) = if fr < values[d] {
                let xc = toward(-rho);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = toward(rho);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                for i in 1..=d {
                    let shrunk: Vec<f64> = (0..d)
                        .map(|k| simplex[0][k] + sigma * (simplex[i][k] - simplex[0][k]))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=d)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("simplex is nonempty");
    (simplex[best].clone(), values[best])
}
