//! Polynomial roots with multiplicities.
//!
//! Aberth–Ehrlich iteration finds all roots simultaneously. A root of
//! multiplicity `m` comes back as `m` approximations spread by roughly
//! `ε^{1/m}`, so approximations are first grouped with a generous radius and
//! each group is then refined by Newton's method on `p^{(m−1)}`, for which the
//! root is simple. Refined centres closer than [`MERGE_TOLERANCE`] are merged.

use num_complex::Complex64;

use super::poly::ComplexPolynomial;

/// Relative radius for grouping raw approximations of one multiple root.
pub const CLUSTER_RADIUS: f64 = 1e-4;
/// Refined roots closer than this (relative to `max(1, |r|)`) are one root.
pub const MERGE_TOLERANCE: f64 = 1e-9;

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: usize,
}

/// All roots of `p` with multiplicities. Empty for constant polynomials.
pub fn roots(p: &ComplexPolynomial) -> Vec<Root> {
    let Some(degree) = p.degree() else { return vec![] };
    if degree == 0 {
        return vec![];
    }
    // roots at zero are exact; strip them so they do not slow the iteration
    let zeros = p.coeffs().iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = ComplexPolynomial::new(p.coeffs()[zeros..].to_vec());
    let mut found = Vec::new();
    if zeros > 0 {
        found.push(Root {
            location: Complex64::new(0.0, 0.0),
            multiplicity: zeros,
        });
    }
    if reduced.degree().unwrap_or(0) > 0 {
        let approx = aberth(&reduced);
        found.extend(refine_clusters(&reduced, &approx));
    }
    merge(found)
}

fn aberth(p: &ComplexPolynomial) -> Vec<Complex64> {
    let n = p.degree().expect("non-constant");
    let lead = p.leading();
    let monic = p.scale(1.0 / lead);
    let dp = monic.derivative();
    let c = monic.coeffs();
    // Fujiwara-type bound on the root moduli
    let radius = (0..n)
        .map(|k| c[k].norm().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    if n == 1 {
        return vec![-c[0]];
    }
    let centre = -c[n - 1] / n as f64;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            centre + Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..MAX_ITERATIONS {
        let mut largest_step: f64 = 0.0;
        for i in 0..n {
            let pv = monic.eval(z[i]);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dp.eval(z[i]);
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                largest_step = largest_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if largest_step < 1e-15 {
            break;
        }
    }
    z
}

fn refine_clusters(p: &ComplexPolynomial, approx: &[Complex64]) -> Vec<Root> {
    let n = approx.len();
    // single-linkage grouping via union-find
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = approx[i].norm().max(approx[j].norm()).max(1.0);
            if (approx[i] - approx[j]).norm() <= CLUSTER_RADIUS * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    let mut label: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match label[r] {
            Some(g) => groups[g].push(approx[i]),
            None => {
                label[r] = Some(groups.len());
                groups.push(vec![approx[i]]);
            }
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let m = g.len();
            let mean = g.iter().sum::<Complex64>() / m as f64;
            Root {
                location: newton(&p.nth_derivative(m - 1), mean),
                multiplicity: m,
            }
        })
        .collect()
}

/// Newton polish of a simple root; keeps the start if a step would worsen it.
fn newton(p: &ComplexPolynomial, start: Complex64) -> Complex64 {
    let dp = p.derivative();
    let mut x = start;
    let mut best = p.eval(x).norm();
    for _ in 0..50 {
        let d = dp.eval(x);
        if d.norm() == 0.0 {
            break;
        }
        let next = x - p.eval(x) / d;
        let val = p.eval(next).norm();
        if !(val < best) {
            break;
        }
        best = val;
        x = next;
        if best == 0.0 {
            break;
        }
    }
    x
}

fn merge(found: Vec<Root>) -> Vec<Root> {
    let mut out: Vec<Root> = Vec::new();
    for r in found {
        match out.iter_mut().find(|o| {
            (o.location - r.location).norm() <= MERGE_TOLERANCE * o.location.norm().max(1.0)
        }) {
            Some(o) => o.multiplicity += r.multiplicity,
            None => out.push(r),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut r: Vec<Root>) -> Vec<Root> {
        r.sort_by(|a, b| {
            a.location
                .re
                .total_cmp(&b.location.re)
                .then(a.location.im.total_cmp(&b.location.im))
        });
        r
    }

    #[test]
    fn simple_roots() {
        let p = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]);
        let r = sorted(roots(&p));
        assert_eq!(r.len(), 2);
        assert!((r[0].location - c(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1].location - c(0.0, 1.0)).norm() < 1e-14);
        assert!(r.iter().all(|x| x.multiplicity == 1));
    }

    #[test]
    fn triple_root() {
        let p = ComplexPolynomial::from_roots(&[c(0.0, 1.0); 3]);
        let r = roots(&p);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 3);
        assert!((r[0].location - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn mixed_multiplicities() {
        let given = [c(1.0, 2.0), c(1.0, 2.0), c(-0.5, -1.0), c(3.0, 0.0), c(3.0, 0.0), c(3.0, 0.0)];
        let p = ComplexPolynomial::from_roots(&given).scale(c(0.3, -2.0));
        let r = sorted(roots(&p));
        assert_eq!(r.iter().map(|x| x.multiplicity).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!((r[0].location - c(-0.5, -1.0)).norm() < 1e-12);
        assert!((r[1].location - c(1.0, 2.0)).norm() < 1e-10);
        assert!((r[2].location - c(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn zero_roots_and_constants() {
        let p = ComplexPolynomial::from_real(&[0.0, 0.0, 2.0]);
        let r = roots(&p);
        assert_eq!(r, vec![Root { location: c(0.0, 0.0), multiplicity: 2 }]);
        assert!(roots(&ComplexPolynomial::from_real(&[4.0])).is_empty());
    }
}
