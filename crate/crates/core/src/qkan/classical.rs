use super::{LayerSpec, QkanSpec};
use crate::error::{domain, Result};

/// `T_r(x)` by the three-term recurrence.
pub fn chebyshev_t(r: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if r == 0 {
        return a;
    }
    for _ in 1..r {
        (a, b) = (b, 2.0 * x * b - a);
    }
    b
}

/// `[T_0(x), ..., T_d(x)]`.
pub fn chebyshev_all(d: usize, x: f64) -> Vec<f64> {
    let mut t = Vec::with_capacity(d + 1);
    t.push(1.0);
    if d >= 1 {
        t.push(x);
    }
    for r in 2..=d {
        t.push(2.0 * x * t[r - 1] - t[r - 2]);
    }
    t
}

/// `Phi(x)_q = 1/N sum_p 1/(d+1) sum_r w[r][p][q] T_r(x_p)`.
pub fn classical_layer_eval(x: &[f64], spec: &LayerSpec) -> Result<Vec<f64>> {
    if x.len() != spec.n_in() {
        return Err(domain(format!(
            "input has {} entries, layer takes {}",
            x.len(),
            spec.n_in()
        )));
    }
    if let Some(v) = x.iter().find(|v| !(v.abs() <= 1.0 + 1e-12)) {
        return Err(domain(format!("input {v} outside [-1, 1]")));
    }
    let d = spec.degree();
    let norm = 1.0 / (spec.n_in() as f64 * (d + 1) as f64);
    let mut out = vec![0.0; spec.n_out()];
    for (p, &xp) in x.iter().enumerate() {
        let t = chebyshev_all(d, xp);
        for (q, o) in out.iter_mut().enumerate() {
            *o += t
                .iter()
                .enumerate()
                .map(|(r, tr)| spec.weight(r, p, q) * tr)
                .sum::<f64>();
        }
    }
    out.iter_mut().for_each(|o| *o *= norm);
    Ok(out)
}

pub fn classical_network_eval(x: &[f64], spec: &QkanSpec) -> Result<Vec<f64>> {
    spec.layers()
        .iter()
        .try_fold(x.to_vec(), |v, layer| classical_layer_eval(&v, layer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recurrence_matches_cosine() {
        for r in 0..10 {
            for i in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                let c = (r as f64 * x.acos()).cos();
                assert!((chebyshev_t(r, x) - c).abs() < 1e-12);
                assert_eq!(chebyshev_all(r, x)[r], chebyshev_t(r, x));
            }
        }
    }

    #[test]
    fn zero_weights_give_zeros() {
        let spec = LayerSpec::constant(4, 2, 3, 0.0).unwrap();
        assert_eq!(classical_layer_eval(&[0.1, 0.2, -0.3, 1.0], &spec).unwrap(), vec![0.0; 2]);
    }

    #[test]
    fn hand_example() {
        let spec = LayerSpec::constant(2, 1, 1, 1.0).unwrap();
        let y = classical_layer_eval(&[1.0, -1.0], &spec).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_input() {
        let spec = LayerSpec::constant(2, 1, 1, 1.0).unwrap();
        assert!(classical_layer_eval(&[1.5, 0.0], &spec).is_err());
    }

    #[test]
    fn identity_like_layer() {
        let n = 4;
        let mut w1 = vec![0.0; n * n];
        for q in 0..n {
            w1[q * n + q] = 1.0;
        }
        let layer = LayerSpec::new(n, n, 1, vec![vec![0.0; n * n], w1]).unwrap();
        let spec = QkanSpec::new(vec![layer.clone()]).unwrap();
        let x = [0.3, -0.6, 0.9, 0.0];
        let y = classical_network_eval(&x, &spec).unwrap();
        assert_eq!(y, classical_layer_eval(&x, &layer).unwrap());
        for q in 0..n {
            // the 1/(d+1) factor halves each input
            assert!((y[q] - x[q] / (2.0 * n as f64)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn outputs_stay_in_range(x in proptest::collection::vec(-1.0f64..=1.0, 4), seed in 0u64..500) {
            let spec = QkanSpec::random(&[4, 2, 2], 3, 1.0, seed).unwrap();
            let mut v = x.clone();
            for layer in spec.layers() {
                v = classical_layer_eval(&v, layer).unwrap();
                prop_assert!(v.iter().all(|y| y.abs() <= 1.0));
            }
        }
    }
}
