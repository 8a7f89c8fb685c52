//! Discrete p-Dirichlet energy on the lattice mesh, its gradient, Jacobi
//! diagonal and Hessian-vector product.

use rayon::prelude::*;

use super::lattice::{tet_corners, Mesh, FIXED_VERTEX, FREE, PERMS};

/// Regularization of `|g|^2` keeping the Hessian finite where the gradient vanishes.
const EPS2: f64 = 1e-24;

const CHUNK: usize = 4096;

pub(crate) struct Energy<'m> {
    pub mesh: &'m Mesh,
    pub p: f64,
    factor: f64,
    offsets: [usize; 8],
    paths: [[usize; 4]; 6],
    /// `(w, k)` per regular tet from the last linearization.
    reg_coef: Vec<[f64; 2]>,
    gen_coef: Vec<[f64; 2]>,
}

#[inline]
fn cell_diffs(u: &[f64], b: usize, off: &[usize; 8], path: &[usize; 4]) -> [f64; 3] {
    let f0 = u[b + off[path[0]]];
    let f1 = u[b + off[path[1]]];
    let f2 = u[b + off[path[2]]];
    let f3 = u[b + off[path[3]]];
    [f1 - f0, f2 - f1, f3 - f2]
}

#[inline]
fn generic_grad(t: &super::lattice::GenericTet, u: &[f64]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for v in 0..4 {
        let val = if t.node[v] == FIXED_VERTEX {
            t.fixed[v]
        } else {
            u[t.node[v] as usize]
        };
        for a in 0..3 {
            g[a] += val * t.grads[v][a];
        }
    }
    g
}

#[inline]
fn generic_dir(t: &super::lattice::GenericTet, d: &[f64]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for v in 0..4 {
        if t.node[v] != FIXED_VERTEX {
            let val = d[t.node[v] as usize];
            for a in 0..3 {
                g[a] += val * t.grads[v][a];
            }
        }
    }
    g
}

#[inline]
fn metric_apply(m: &[f64; 7], d: &[f64; 3]) -> [f64; 3] {
    [
        m[0] * d[0] + m[1] * d[1] + m[2] * d[2],
        m[1] * d[0] + m[3] * d[1] + m[4] * d[2],
        m[2] * d[0] + m[4] * d[1] + m[5] * d[2],
    ]
}

#[inline]
fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl<'m> Energy<'m> {
    pub fn new(mesh: &'m Mesh, p: f64) -> Self {
        let lat = &mesh.lattice;
        Energy {
            mesh,
            p,
            factor: lat.symmetry_factor(),
            offsets: lat.corner_offsets(),
            paths: std::array::from_fn(|i| tet_corners(&PERMS[i])),
            reg_coef: vec![[0.0; 2]; 6 * mesh.regular.len()],
            gen_coef: vec![[0.0; 2]; mesh.generic.len()],
        }
    }

    /// Energy with the symmetry factor applied. Chunk sums are reduced in order.
    pub fn value(&self, u: &[f64]) -> f64 {
        let half_p = 0.5 * self.p;
        let reg: f64 = self
            .mesh
            .regular
            .par_chunks(CHUNK)
            .zip(self.mesh.metric.par_chunks(6 * CHUNK))
            .map(|(cells, metric)| {
                let mut acc = 0.0;
                for (ci, &b) in cells.iter().enumerate() {
                    for (ti, path) in self.paths.iter().enumerate() {
                        let m = &metric[6 * ci + ti];
                        let d = cell_diffs(u, b as usize, &self.offsets, path);
                        let s = dot3(&d, &metric_apply(m, &d)) + EPS2;
                        acc += m[6] * s.powf(half_p);
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let gen: f64 = self
            .mesh
            .generic
            .iter()
            .map(|t| {
                let g = generic_grad(t, u);
                t.vol * (dot3(&g, &g) + EPS2).powf(half_p)
            })
            .sum();
        self.factor * (reg + gen)
    }

    /// Stores the second-order coefficients at `u` and returns
    /// `(energy, gradient, Jacobi diagonal)`; entries at fixed nodes are zero.
    pub fn linearize(&mut self, u: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = u.len();
        let mut grad = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let p = self.p;
        let mut energy = 0.0;
        let off = self.offsets;
        for (ci, &b) in self.mesh.regular.iter().enumerate() {
            let b = b as usize;
            for (ti, path) in self.paths.iter().enumerate() {
                let m = &self.mesh.metric[6 * ci + ti];
                let d = cell_diffs(u, b, &off, path);
                let gd = metric_apply(m, &d);
                let s = dot3(&d, &gd) + EPS2;
                let sp = s.powf(0.5 * p - 1.0);
                energy += m[6] * sp * s;
                let w = p * m[6] * sp;
                let k = w * (p - 2.0) / s;
                self.reg_coef[6 * ci + ti] = [w, k];
                let idx = [b + off[path[0]], b + off[path[1]], b + off[path[2]], b + off[path[3]]];
                grad[idx[0]] -= w * gd[0];
                grad[idx[1]] += w * (gd[0] - gd[1]);
                grad[idx[2]] += w * (gd[1] - gd[2]);
                grad[idx[3]] += w * gd[2];
                // l^T G l and G d . l for the vertex vectors l_v in path coordinates
                let lgl = [m[0], m[0] - 2.0 * m[1] + m[3], m[3] - 2.0 * m[4] + m[5], m[5]];
                let gl = [-gd[0], gd[0] - gd[1], gd[1] - gd[2], gd[2]];
                for v in 0..4 {
                    diag[idx[v]] += w * lgl[v] + k * gl[v] * gl[v];
                }
            }
        }
        for (ti, t) in self.mesh.generic.iter().enumerate() {
            let g = generic_grad(t, u);
            let s = dot3(&g, &g) + EPS2;
            let sp = s.powf(0.5 * p - 1.0);
            energy += t.vol * sp * s;
            let w = p * t.vol * sp;
            let k = w * (p - 2.0) / s;
            self.gen_coef[ti] = [w, k];
            for v in 0..4 {
                if t.node[v] == FIXED_VERTEX {
                    continue;
                }
                let gv = &t.grads[v];
                let dot = dot3(&g, gv);
                let idx = t.node[v] as usize;
                grad[idx] += w * dot;
                diag[idx] += w * dot3(gv, gv) + k * dot * dot;
            }
        }
        let f = self.factor;
        for (i, s) in self.mesh.state.iter().enumerate() {
            if *s == FREE {
                grad[i] *= f;
                diag[i] *= f;
            } else {
                grad[i] = 0.0;
                diag[i] = 0.0;
            }
        }
        (f * energy, grad, diag)
    }

    /// `out = H(u) d` using coefficients from the last `linearize(u)`.
    pub fn hess_vec(&self, u: &[f64], d: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let off = self.offsets;
        for (ci, &b) in self.mesh.regular.iter().enumerate() {
            let b = b as usize;
            for (ti, path) in self.paths.iter().enumerate() {
                let m = &self.mesh.metric[6 * ci + ti];
                let [w, k] = self.reg_coef[6 * ci + ti];
                let gd = metric_apply(m, &cell_diffs(u, b, &off, path));
                let dd = cell_diffs(d, b, &off, path);
                let gdd = metric_apply(m, &dd);
                let c = k * dot3(&gd, &dd);
                let r = [w * gdd[0] + c * gd[0], w * gdd[1] + c * gd[1], w * gdd[2] + c * gd[2]];
                out[b + off[path[0]]] -= r[0];
                out[b + off[path[1]]] += r[0] - r[1];
                out[b + off[path[2]]] += r[1] - r[2];
                out[b + off[path[3]]] += r[2];
            }
        }
        for (ti, t) in self.mesh.generic.iter().enumerate() {
            let [w, k] = self.gen_coef[ti];
            let g = generic_grad(t, u);
            let dg = generic_dir(t, d);
            let c = k * dot3(&g, &dg);
            let q = [w * dg[0] + c * g[0], w * dg[1] + c * g[1], w * dg[2] + c * g[2]];
            for v in 0..4 {
                if t.node[v] != FIXED_VERTEX {
                    out[t.node[v] as usize] += dot3(&q, &t.grads[v]);
                }
            }
        }
        let f = self.factor;
        for (i, s) in self.mesh.state.iter().enumerate() {
            out[i] = if *s == FREE { out[i] * f } else { 0.0 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::lattice::{build_mesh, Grading, Lattice};
    use super::*;
    use crate::geometry::Body;

    fn setup() -> (Mesh, Vec<f64>) {
        let ball = Body::ball(3, 1.0).unwrap();
        let lat = Lattice::new([0.0; 3], 3.0, 12, true, Some(Grading::new(0.9, 3.0).unwrap())).unwrap();
        let mesh = build_mesh(&ball, lat).unwrap();
        let u: Vec<f64> = (0..mesh.lattice.len())
            .map(|i| match mesh.state[i] {
                1 => 1.0,
                2 => 0.0,
                _ => {
                    let x = mesh.lattice.position(i);
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    (1.0 / r - 1.0 / 3.0) * 1.5 + 0.01 * (7.0 * x[0]).sin()
                }
            })
            .collect();
        (mesh, u)
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        for p in [1.3, 2.0, 2.5] {
            let (mesh, u) = setup();
            let mut e = Energy::new(&mesh, p);
            let (e0, grad, diag) = e.linearize(&u);
            assert!((e0 - e.value(&u)).abs() < 1e-10 * e0);
            let dir: Vec<f64> = (0..u.len())
                .map(|i| if mesh.state[i] == FREE { ((i * 7919) % 13) as f64 / 13.0 - 0.5 } else { 0.0 })
                .collect();
            let eps = 1e-6;
            let shift = |t: f64| -> Vec<f64> { u.iter().zip(&dir).map(|(a, b)| a + t * b).collect() };
            let fd = (e.value(&shift(eps)) - e.value(&shift(-eps))) / (2.0 * eps);
            let an: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "p={p}: {fd} vs {an}");
            let mut hv = vec![0.0; u.len()];
            e.hess_vec(&u, &dir, &mut hv);
            let dhd: f64 = hv.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let fd2 = (e.value(&shift(eps)) - 2.0 * e0 + e.value(&shift(-eps))) / (eps * eps);
            assert!((fd2 - dhd).abs() < 1e-3 * dhd.abs(), "p={p}: {fd2} vs {dhd}");
            assert!(diag.iter().all(|&x| x >= 0.0));
            // diagonal equals e_i^T H e_i
            let i = (0..u.len()).find(|&i| mesh.state[i] == FREE && diag[i] > 0.0).unwrap();
            let mut ei = vec![0.0; u.len()];
            ei[i] = 1.0;
            e.hess_vec(&u, &ei, &mut hv);
            assert!((hv[i] - diag[i]).abs() < 1e-10 * diag[i]);
        }
    }
}
