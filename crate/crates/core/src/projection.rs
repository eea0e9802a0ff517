//! Euclidean projection onto the cone `K = SOC(p, rho) ∩ {z : <a_i, z> >= 0}`.
//!
//! Two solvers are provided.
//!
//! [`Solver::ActiveSet`] is exact up to rounding. At the optimum `z*` the
//! normal cone is generated by a linearly independent set `S` of active
//! halfspace normals (plus the cap when it is active), so `z*` is the
//! projection of `x` onto `L_S ∩ SOC` or onto `L_S`, where `L_S` is the
//! subspace where the constraints in `S` hold with equality. Both have closed
//! forms, and every such candidate that is feasible is at least as far from
//! `x` as `z*`; the closest feasible candidate is therefore `z*`. Candidates
//! are enumerated over a working set that starts empty and grows by the most
//! violated constraint until the result is feasible for all of them.
//!
//! [`Solver::Dykstra`] runs Dykstra's alternating projections with correction
//! terms. It is simple and matrix-free but its rate degrades to a crawl when
//! two active constraints meet at a small angle.

use crate::error::{Error, Result};
use crate::sphere::dot;

/// Iterate-plus-correction change below which Dykstra stops.
pub const DYKSTRA_TOL: f64 = 1e-13;

pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;

/// Constraint violation (on a vector of norm <= 1) tolerated by the active-set solver.
const FEASIBILITY_TOL: f64 = 1e-13;

/// Gram-Schmidt residual below which a normal is dependent on the others.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Upper bound on enumerated subsets per solve before giving up.
const MAX_CANDIDATES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    ActiveSet,
    Dykstra,
}

/// Work done by one projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    /// Dykstra sweeps, or constraint-generation rounds for the active-set solver.
    pub sweeps: usize,
    /// Last Dykstra change; zero for the active-set solver.
    pub final_change: f64,
}

/// The second-order cone `{z : <p, z> >= cos(rho) ‖z‖}` with unit axis `p`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CapCone<'a> {
    pub axis: &'a [f64],
    pub cos_radius: f64,
}

impl CapCone<'_> {
    pub fn violation(&self, z: &[f64]) -> f64 {
        self.cos_radius * dot(z, z).sqrt() - dot(self.axis, z)
    }

    pub fn project(&self, z: &mut [f64]) {
        let k = (1.0 - self.cos_radius * self.cos_radius).sqrt() / self.cos_radius;
        project_circular_cone(self.axis, k, z);
    }
}

/// Projects onto `{z : ‖z - <u, z> u‖ <= k <u, z>}` for a unit axis `u`.
///
/// Writing `z = t u + w`, the answer is `z` inside the cone, `0` inside the
/// polar cone, and otherwise the nearest point of the boundary ray through
/// `u + k w/‖w‖`.
fn project_circular_cone(u: &[f64], k: f64, z: &mut [f64]) {
    let t = dot(u, z);
    let w_norm = z
        .iter()
        .zip(u)
        .map(|(zi, ui)| (zi - t * ui).powi(2))
        .sum::<f64>()
        .sqrt();
    if w_norm <= k * t {
        return;
    }
    if k * w_norm <= -t {
        z.iter_mut().for_each(|zi| *zi = 0.0);
        return;
    }
    let s = (t + k * w_norm) / (1.0 + k * k);
    let w_scale = s * k / w_norm;
    for (zi, ui) in z.iter_mut().zip(u) {
        let wi = *zi - t * ui;
        *zi = s * ui + w_scale * wi;
    }
}

fn project_halfspace_cone(a: &[f64], z: &mut [f64]) {
    let s = dot(a, z);
    if s < 0.0 {
        for (zi, ai) in z.iter_mut().zip(a) {
            *zi -= s * ai;
        }
    }
}

/// Projects `x` onto `cap ∩ {<a, z> >= 0 : a in normals}`; normals are unit vectors.
pub(crate) fn project_cone(
    solver: Solver,
    cap: CapCone<'_>,
    normals: &[&[f64]],
    x: &[f64],
) -> Result<(Vec<f64>, SolveStats)> {
    match solver {
        Solver::ActiveSet => active_set(cap, normals, x),
        Solver::Dykstra => dykstra(cap, normals, x),
    }
}

fn dykstra(cap: CapCone<'_>, normals: &[&[f64]], x: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    let dim = x.len();
    let m = normals.len() + 1;
    let mut z = x.to_vec();
    let mut corrections = vec![vec![0.0; dim]; m];
    let mut y = vec![0.0; dim];
    let mut z_prev = vec![0.0; dim];
    let mut change = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < DYKSTRA_MAX_SWEEPS {
        sweeps += 1;
        z_prev.copy_from_slice(&z);
        let mut correction_change = 0.0;
        for (k, corr) in corrections.iter_mut().enumerate() {
            for ((yi, zi), ci) in y.iter_mut().zip(&z).zip(corr.iter()) {
                *yi = zi + ci;
            }
            z.copy_from_slice(&y);
            if k == 0 {
                cap.project(&mut z);
            } else {
                project_halfspace_cone(normals[k - 1], &mut z);
            }
            for ((ci, yi), zi) in corr.iter_mut().zip(&y).zip(&z) {
                let updated = yi - zi;
                correction_change += (updated - *ci).powi(2);
                *ci = updated;
            }
        }
        let step = z
            .iter()
            .zip(&z_prev)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        change = step.max(correction_change.sqrt());
        if change <= DYKSTRA_TOL {
            return Ok((
                z,
                SolveStats {
                    sweeps,
                    final_change: change,
                },
            ));
        }
    }
    Err(Error::NoConvergence { sweeps, change })
}

fn active_set(cap: CapCone<'_>, normals: &[&[f64]], x: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    let mut working: Vec<usize> = Vec::new();
    let mut budget = MAX_CANDIDATES;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let z = best_candidate(cap, normals, &working, x, &mut budget)?;
        let scale = dot(&z, &z).sqrt().max(f64::MIN_POSITIVE);
        let worst = (0..normals.len())
            .filter(|i| !working.contains(i))
            .map(|i| (i, dot(normals[i], &z) / scale))
            .filter(|&(_, s)| s < -FEASIBILITY_TOL)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((i, _)) => working.push(i),
            None => {
                return Ok((
                    z,
                    SolveStats {
                        sweeps: rounds,
                        final_change: 0.0,
                    },
                ))
            }
        }
    }
}

/// Closest feasible candidate for the constraints in `working` (and the cap).
fn best_candidate(
    cap: CapCone<'_>,
    normals: &[&[f64]],
    working: &[usize],
    x: &[f64],
    budget: &mut usize,
) -> Result<Vec<f64>> {
    let dim = x.len();
    let max_size = working.len().min(dim - 1);
    let mut best: Option<(f64, Vec<f64>)> = None;

    let mut consider = |z: Vec<f64>| {
        let n = dot(&z, &z).sqrt();
        if n <= 1e-14 {
            return;
        }
        if cap.violation(&z) / n > FEASIBILITY_TOL {
            return;
        }
        if working
            .iter()
            .any(|&i| dot(normals[i], &z) / n < -FEASIBILITY_TOL)
        {
            return;
        }
        let d2: f64 = z.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d2 < *bd) {
            best = Some((d2, z));
        }
    };

    // Depth-first over subsets of `working`, carrying an orthonormal basis
    // of the span of the chosen normals.
    let mut stack: Vec<(usize, Vec<Vec<f64>>)> = vec![(0, Vec::new())];
    while let Some((start, basis)) = stack.pop() {
        if *budget == 0 {
            return Err(Error::NoConvergence {
                sweeps: MAX_CANDIDATES,
                change: f64::NAN,
            });
        }
        *budget -= 1;

        let in_subspace = |v: &[f64]| -> Vec<f64> {
            let mut r = v.to_vec();
            for q in &basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
            r
        };

        let px = in_subspace(x);
        consider(px.clone());
        let pp = in_subspace(cap.axis);
        let pp_norm = dot(&pp, &pp).sqrt();
        if pp_norm > cap.cos_radius {
            let u: Vec<f64> = pp.iter().map(|c| c / pp_norm).collect();
            let cos_b = cap.cos_radius / pp_norm;
            let k = (1.0 - cos_b * cos_b).sqrt() / cos_b;
            let mut z = px;
            project_circular_cone(&u, k, &mut z);
            consider(z);
        }

        if basis.len() < max_size {
            for (pos, &i) in working.iter().enumerate().skip(start) {
                let mut r = normals[i].to_vec();
                // Two Gram-Schmidt passes for orthogonality.
                for _ in 0..2 {
                    for q in &basis {
                        let c = dot(q, &r);
                        r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
                    }
                }
                let rn = dot(&r, &r).sqrt();
                if rn <= DEPENDENCE_TOL {
                    continue;
                }
                r.iter_mut().for_each(|c| *c /= rn);
                let mut next = basis.clone();
                next.push(r);
                stack.push((pos + 1, next));
            }
        }
    }
    best.map(|(_, z)| z)
        .ok_or(Error::EmptyOrDegenerate { norm: 0.0 })
}
