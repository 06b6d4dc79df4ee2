use super::lp::LinearProgram;
use super::{transport, DiscreteMeasure, LipschitzTestSet, MeasureSet, MERGE_TOL};
use crate::error::{invalid, Result};
use crate::systems::{MapSpec, PhaseSpace};

fn same_space(a: PhaseSpace, b: PhaseSpace) -> Result<()> {
    if a != b {
        return Err(invalid(format!(
            "measures live on different phase spaces ({} vs {})",
            a.name(),
            b.name()
        )));
    }
    Ok(())
}

/// Sorted union of the supports, with near-coincident points merged.
fn breakpoints<'a>(measures: impl Iterator<Item = &'a DiscreteMeasure>) -> Vec<f64> {
    let mut z: Vec<f64> = measures.flat_map(|m| m.support().iter().copied()).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    z.dedup_by(|b, a| *b - *a < MERGE_TOL);
    z
}

/// `F(z_t) = mu([0, z_t])` at each breakpoint.
fn cdf_at(mu: &DiscreteMeasure, z: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    let mut atoms = mu.atoms().peekable();
    for &zt in z {
        while let Some(&(x, w)) = atoms.peek() {
            if x < zt + MERGE_TOL {
                acc += w;
                atoms.next();
            } else {
                break;
            }
        }
        out.push(acc);
    }
    out
}

/// `W1` on the interval as `int |F_mu - F_nu|`.
pub fn w1_cdf(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    same_space(mu.space(), nu.space())?;
    if mu.space() != PhaseSpace::Interval {
        return Err(invalid("the CDF formula for W1 applies to the interval"));
    }
    let z = breakpoints([mu, nu].into_iter());
    let (fm, fn_) = (cdf_at(mu, &z), cdf_at(nu, &z));
    Ok(z.windows(2)
        .enumerate()
        .map(|(t, w)| (w[1] - w[0]) * (fm[t] - fn_[t]).abs())
        .sum())
}

/// `W1` as the optimal value of the transportation problem with ground cost `rho`.
pub fn w1_transport(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    same_space(mu.space(), nu.space())?;
    let space = mu.space();
    let (xs, ys) = (mu.support(), nu.support());
    let plan = transport::solve(mu.weights(), nu.weights(), |i, j| space.dist(xs[i], ys[j]))?;
    Ok(plan.cost.max(0.0))
}

/// `W1` on the circle as `min_c int |F_mu - F_nu - c|`, where `c` is the net
/// circulation; the minimiser is a length-weighted median of the CDF gap.
pub fn w1_circle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    same_space(mu.space(), nu.space())?;
    if mu.space() != PhaseSpace::Circle {
        return Err(invalid("the circulation formula for W1 applies to the circle"));
    }
    // a fixed argument order makes the result exactly symmetric
    let (mu, nu) = if (nu.support(), nu.weights()) < (mu.support(), mu.weights()) {
        (nu, mu)
    } else {
        (mu, nu)
    };
    let z = breakpoints([mu, nu].into_iter());
    let (fm, fn_) = (cdf_at(mu, &z), cdf_at(nu, &z));
    // the wrap-around gap carries no CDF difference
    let mut gaps: Vec<(f64, f64)> = z.windows(2).enumerate().map(|(t, w)| (fm[t] - fn_[t], w[1] - w[0])).collect();
    gaps.push((0.0, 1.0 - z[z.len() - 1] + z[0]));
    gaps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    let c = gaps
        .iter()
        .find(|g| {
            acc += g.1;
            acc >= 0.5
        })
        .map_or(0.0, |g| g.0);
    Ok(gaps.iter().map(|&(d, len)| len * (d - c).abs()).sum())
}

/// Exact `W1`: the CDF integral on the interval, the circulation formula on the circle.
pub fn w1_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    same_space(mu.space(), nu.space())?;
    match mu.space() {
        PhaseSpace::Interval => w1_cdf(mu, nu),
        PhaseSpace::Circle => w1_circle(mu, nu),
    }
}

/// `min over lambda in the simplex of W1(mu, sum lambda_k nu_k)` as one LP.
///
/// In one dimension an optimal coupling is described by the net mass flowing
/// across each gap between consecutive breakpoints, which is the CDF
/// difference (plus a free circulation on the circle). The mixture weights
/// enter those flows linearly, so the LP has one row per gap and one column
/// per `lambda_k`, gap slack pair, and circulation part.
pub fn hull_distance_lp(mu: &DiscreteMeasure, extremes: &[DiscreteMeasure]) -> Result<(f64, Vec<f64>)> {
    if extremes.is_empty() {
        return Err(invalid("hull of an empty set"));
    }
    for e in extremes {
        same_space(mu.space(), e.space())?;
    }
    let space = mu.space();
    let k = extremes.len();
    let z = breakpoints(std::iter::once(mu).chain(extremes.iter()));
    let f_mu = cdf_at(mu, &z);
    let f_ext: Vec<Vec<f64>> = extremes.iter().map(|e| cdf_at(e, &z)).collect();

    // (gap length, index of the breakpoint whose CDF applies); the circle adds the wrap gap with zero CDF difference
    let mut gaps: Vec<(f64, Option<usize>)> = z.windows(2).enumerate().map(|(t, w)| (w[1] - w[0], Some(t))).collect();
    let circulation = space == PhaseSpace::Circle;
    if circulation {
        gaps.push((1.0 - z[z.len() - 1] + z[0], None));
    }
    if gaps.is_empty() {
        let mut lambda = vec![0.0; k];
        lambda[0] = 1.0;
        return Ok((0.0, lambda));
    }

    let g = gaps.len();
    let slack = k; // u_t at slack + 2t, v_t at slack + 2t + 1
    let circ = k + 2 * g; // c+ and c-
    let nv = circ + if circulation { 2 } else { 0 };
    let mut lp = LinearProgram::new(nv);
    for (t, &(len, _)) in gaps.iter().enumerate() {
        lp.objective[slack + 2 * t] = len;
        lp.objective[slack + 2 * t + 1] = len;
    }
    for (t, &(_, at)) in gaps.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(k + 4);
        if let Some(idx) = at {
            for (e, f) in f_ext.iter().enumerate() {
                terms.push((e, f[idx]));
            }
        }
        terms.push((slack + 2 * t, 1.0));
        terms.push((slack + 2 * t + 1, -1.0));
        if circulation {
            terms.push((circ, 1.0));
            terms.push((circ + 1, -1.0));
        }
        lp.add_row(&terms, at.map_or(0.0, |idx| f_mu[idx]));
    }
    lp.add_row(&(0..k).map(|e| (e, 1.0)).collect::<Vec<_>>(), 1.0);
    let sol = lp.solve()?;
    Ok((sol.value.max(0.0), sol.x[..k].to_vec()))
}

/// `W1(mu, P)`: nearest extreme, or nearest point of the convex hull when the set has hull semantics.
pub fn w1_point_to_set(mu: &DiscreteMeasure, set: &MeasureSet) -> Result<f64> {
    if set.is_empty() {
        return Err(invalid("distance to an empty measure set"));
    }
    same_space(mu.space(), set.space())?;
    if set.hull() && set.len() > 1 {
        return Ok(hull_distance_lp(mu, set.extremes())?.0);
    }
    let mut best = f64::INFINITY;
    for e in set.extremes() {
        best = best.min(w1_distance(mu, e)?);
        if best == 0.0 {
            break;
        }
    }
    Ok(best)
}

/// The set distance `max_p W1(p, Q) + max_q W1(q, P)` together with its two directed terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffDistance {
    pub sum: f64,
    pub directed_pq: f64,
    pub directed_qp: f64,
}

fn directed(from: &MeasureSet, to: &MeasureSet) -> Result<f64> {
    // W1(., to) is convex when `to` is convex, so the sup over a hull sits at an extreme
    let mut worst = 0.0f64;
    for p in from.extremes() {
        worst = worst.max(w1_point_to_set(p, to)?);
    }
    Ok(worst)
}

pub fn hausdorff_distance(p: &MeasureSet, q: &MeasureSet) -> Result<HausdorffDistance> {
    if p.is_empty() || q.is_empty() {
        return Err(invalid("Hausdorff distance with an empty set"));
    }
    same_space(p.space(), q.space())?;
    let directed_pq = directed(p, q)?;
    let directed_qp = directed(q, p)?;
    Ok(HausdorffDistance {
        sum: directed_pq + directed_qp,
        directed_pq,
        directed_qp,
    })
}

/// Image measure `T_* mu`.
pub fn push_forward(mu: &DiscreteMeasure, spec: &MapSpec) -> Result<DiscreteMeasure> {
    same_space(mu.space(), spec.space())?;
    let support = mu.support().iter().map(|&x| spec.eval(x)).collect();
    DiscreteMeasure::new(mu.space(), support, mu.weights().to_vec())
}

/// `max over tests of |int phi dmu - int phi o T dmu|`.
pub fn invariance_residual(mu: &DiscreteMeasure, spec: &MapSpec, tests: &LipschitzTestSet) -> Result<f64> {
    if tests.is_empty() {
        return Err(invalid("invariance residual with an empty test set"));
    }
    same_space(mu.space(), spec.space())?;
    same_space(mu.space(), tests.space)?;
    let images: Vec<f64> = mu.support().iter().map(|&x| spec.eval(x)).collect();
    let mut worst = 0.0f64;
    for k in 0..tests.len() {
        let mut diff = 0.0;
        for ((x, w), &y) in mu.atoms().zip(&images) {
            diff += w * (tests.eval(k, x) - tests.eval(k, y));
        }
        worst = worst.max(diff.abs());
    }
    Ok(worst)
}
