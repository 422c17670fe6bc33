//! Initial training set: the incumbent, a coordinate cross and diagonal
//! points, chosen so that the first model system has full rank.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::MonomialBasis;
use crate::linalg::rank;
use crate::problem::{same_point, Bounds, DerivativeAvailability};

/// Step of length `delta` along `sign * e_i`, flipped to `2 delta` in the
/// other direction when it leaves the box.
fn axis_point(x0: &DVector<f64>, i: usize, sign: f64, delta: f64, bounds: &Bounds) -> DVector<f64> {
    let mut y = x0.clone();
    let fits = |v: f64| v >= bounds.lower()[i] && v <= bounds.upper()[i];
    y[i] = if fits(x0[i] + sign * delta) {
        x0[i] + sign * delta
    } else {
        x0[i] - 2.0 * sign * delta
    };
    bounds.project(&y)
}

/// Candidate points in preference order: `x0`, the positive then negative
/// coordinate steps, then diagonal steps `delta (e_i + e_j) / sqrt 2`.
/// Directions without derivative information come first within each group.
pub fn candidate_points(
    x0: &DVector<f64>,
    delta: f64,
    bounds: &Bounds,
    availability: &DerivativeAvailability,
) -> Vec<DVector<f64>> {
    let n = x0.len();
    let mut order = availability.unknown_directions(n);
    order.extend(availability.first().iter().copied());
    let mut out = vec![x0.clone()];
    for sign in [1.0, -1.0] {
        for &i in &order {
            out.push(axis_point(x0, i, sign, delta, bounds));
        }
    }
    let diag = delta / 2f64.sqrt();
    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)] {
        for a in 0..n {
            for b in a + 1..n {
                let (i, j) = (order[a], order[b]);
                let mut y = x0.clone();
                y[i] += si * diag;
                y[j] += sj * diag;
                out.push(bounds.project(&y));
            }
        }
    }
    let mut unique: Vec<DVector<f64>> = Vec::with_capacity(out.len());
    for y in out {
        if !unique.iter().any(|u| same_point(u, &y)) {
            unique.push(y);
        }
    }
    unique
}

/// Rows a point contributes to the complete monomial system (with constant
/// column), shifted to `x0`.
fn condition_rows(
    basis: &MonomialBasis,
    z: &DVector<f64>,
    availability: &DerivativeAvailability,
    second_order: bool,
) -> Vec<DVector<f64>> {
    let q = basis.len();
    let mut rows = vec![basis.full_row(z)];
    for &l in availability.first() {
        let mut r = DVector::zeros(q + 1);
        r.rows_mut(1, q).copy_from(&basis.derivative_row(z, l));
        rows.push(r);
    }
    if second_order {
        for &(i, j) in availability.second() {
            let mut r = DVector::zeros(q + 1);
            r[1 + basis.quad_column(i, j)] = 1.0;
            rows.push(r);
        }
    }
    rows
}

fn stack(rows: &[DVector<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c])
}

/// Picks `p1` points for a monomial-basis system: candidates that raise the
/// rank of the complete system are taken first, then the rest in order.
/// When that leaves the system short of full column rank with every slot
/// used, seeded random points of the ball replace the structured ones.
pub fn select_monomial_points(
    x0: &DVector<f64>,
    delta: f64,
    bounds: &Bounds,
    availability: &DerivativeAvailability,
    second_order: bool,
    p1: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let n = x0.len();
    let basis = MonomialBasis::new(n);
    let q1 = basis.q1();
    let mut pool = candidate_points(x0, delta, bounds, availability);
    let structured = pool.len();
    for _ in 0..4 * q1 {
        let u: DVector<f64> = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let r = delta * rng.random::<f64>().powf(1.0 / n as f64);
        let y = bounds.project(&(x0 + u.normalize() * r));
        if !pool.iter().any(|p| same_point(p, &y)) {
            pool.push(y);
        }
    }

    let random_count = pool.len() - structured;
    let pool_rows: Vec<Vec<DVector<f64>>> = pool
        .iter()
        .map(|y| condition_rows(&basis, &((y - x0) / delta), availability, second_order))
        .collect();
    let rank_of = |picked: &[usize]| {
        let rows: Vec<DVector<f64>> = picked.iter().flat_map(|&k| pool_rows[k].iter().cloned()).collect();
        rank(&stack(&rows, q1))
    };
    let mut chosen = vec![0usize];
    let mut current = rank_of(&chosen);
    for k in 1..pool.len() {
        if chosen.len() == p1 || current == q1 {
            break;
        }
        chosen.push(k);
        let r = rank_of(&chosen);
        if r > current {
            current = r;
        } else {
            chosen.pop();
        }
    }
    // with no spare slots the first-come choice can waste points on
    // directions the derivative rows already cover; random points of the
    // ball are generically in general position, so try those instead
    let random_start = pool.len() - random_count;
    if current < q1 && chosen.len() == p1 && p1 > 1 {
        for block in (random_start..pool.len()).collect::<Vec<_>>().chunks(p1 - 1) {
            if block.len() < p1 - 1 {
                break;
            }
            let mut trial = vec![0usize];
            trial.extend_from_slice(block);
            let r = rank_of(&trial);
            if r > current {
                chosen = trial;
                current = r;
            }
            if current == q1 {
                break;
            }
        }
    }
    for k in 1..pool.len() {
        if chosen.len() == p1 {
            break;
        }
        if !chosen.contains(&k) {
            chosen.push(k);
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|k| pool[k].clone()).collect()
}
