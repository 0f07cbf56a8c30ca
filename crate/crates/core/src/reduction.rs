//! Reduction of the relay beamformer to the uplink signal subspace.
//!
//! With `H_UL = U Sigma V^H` (economy SVD), any SINR-optimal relay matrix has
//! the form `A = conj(U) B U^H`, so all design work happens on the `r x r`
//! matrix `B` (`r = min(M, K)`) and the effective channels `h~_k = U^H h_k`.
//!
//! The vectorised problem uses column stacking, `b = vec(B)`, for which
//!
//! - `h~_k^T B h~_j = (h~_j kron h~_k)^T b`
//! - `h~_k^T B      = (I kron h~_k^T) b`
//! - `B h~_k        = (h~_k^T kron I) b`

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;
use num_traits::Float;

use crate::channel::{ChannelSet, PairingMap};
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// SVD factors of the uplink matrix and the effective channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedChannels {
    /// `M x r`, orthonormal columns.
    pub u: CMatrix,
    /// Nonincreasing singular values, length `r`.
    pub sigma: DVector<f64>,
    /// `K x r`, orthonormal columns.
    pub v: CMatrix,
    /// `r x K`; column `k` is `h~_k = U^H h_k`.
    pub htilde: CMatrix,
}

impl ReducedChannels {
    /// Dimension `r` of the reduced space.
    pub fn dim(&self) -> usize {
        self.htilde.nrows()
    }

    pub fn num_sources(&self) -> usize {
        self.htilde.ncols()
    }

    pub fn effective(&self, k: usize) -> CVector {
        self.htilde.column(k).into_owned()
    }

    /// Builds reduced channels directly from effective channels, with
    /// `U = I`. Useful for canonical test instances.
    pub fn from_effective(htilde: CMatrix) -> Self {
        let r = htilde.nrows();
        let svd = htilde.clone().svd(false, false);
        Self {
            u: CMatrix::identity(r, r),
            sigma: svd.singular_values,
            v: CMatrix::identity(htilde.ncols(), r),
            htilde,
        }
    }
}

/// Economy SVD of the uplink channel matrix and the effective channels.
pub fn reduce(channels: &ChannelSet) -> Result<ReducedChannels> {
    let h = &channels.uplink;
    let k = h.ncols();
    let svd = h.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateChannel("SVD did not converge".into())),
    };
    let sigma = svd.singular_values;
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    let rank = sigma.iter().filter(|&&s| s > top * 1e-12).count();
    if top == 0.0 || rank + 1 < k.min(h.nrows()) {
        return Err(Error::DegenerateChannel(format!("uplink rank {rank} for {k} sources")));
    }
    // nalgebra sorts singular values in decreasing order; enforce it anyway.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(core::cmp::Ordering::Equal));
    let u = u.select_columns(order.iter());
    let v = v_t.adjoint().select_columns(order.iter());
    let sigma = DVector::from_iterator(order.len(), order.iter().map(|&i| sigma[i]));
    let htilde = u.adjoint() * h;
    Ok(ReducedChannels { u, sigma, v, htilde })
}

/// `A = conj(U) B U^H`.
pub fn lift(b: &CMatrix, u: &CMatrix) -> Result<CMatrix> {
    let r = u.ncols();
    if b.nrows() != r || b.ncols() != r {
        return Err(Error::InvalidArgument(format!(
            "B is {}x{}, U has {r} columns",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(u.conjugate() * b * u.adjoint())
}

/// Column-stacking vectorisation.
pub fn vec(q: &CMatrix) -> CVector {
    // nalgebra storage is column-major.
    CVector::from_column_slice(q.as_slice())
}

/// Inverse of [`vec`] for a square `r x r` matrix.
pub fn unvec(b: &CVector, r: usize) -> Result<CMatrix> {
    if b.len() != r * r {
        return Err(Error::InvalidArgument(format!("vector of length {} is not {r}x{r}", b.len())));
    }
    Ok(CMatrix::from_column_slice(r, r, b.as_slice()))
}

/// Which beamformer produced a [`RelayBeamformer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Minimum interference.
    Mi,
    /// Minimum power.
    Mp,
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Scheme::Mi => "MI",
            Scheme::Mp => "MP",
        })
    }
}

/// A reduced-space relay beamformer. `b` already includes the scaling `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayBeamformer {
    pub b: CMatrix,
    pub alpha: f64,
    pub scheme: Scheme,
    /// Set when a ridge had to be added to a singular interference matrix.
    pub regularized: bool,
}

impl RelayBeamformer {
    /// The `M x M` relay matrix `A`.
    pub fn lifted(&self, red: &ReducedChannels) -> Result<CMatrix> {
        lift(&self.b, &red.u)
    }
}

/// Coupling vectors of the vectorised beamforming problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    /// `f_k = sqrt(p_partner) (h~_partner kron h~_k)`.
    pub f: Vec<CVector>,
    /// For each `k`, the pairs `(j, d_kj)` with `d_kj = sqrt(p_j) (h~_j kron h~_k)`
    /// over all `j` outside `k`'s pair.
    pub d: Vec<Vec<(usize, CVector)>>,
    /// `G_k = I kron h~_k^T` (`r x r^2`).
    pub g_mats: Vec<CMatrix>,
    /// `sum_k (R_k + sigma^2 N_k)`, Hermitian.
    pub phi: CMatrix,
    /// `[conj(f_1) ... conj(f_K)]`, so that `C^H b` stacks `f_k^T b`.
    pub c: CMatrix,
    /// Desired-gain constraint values `beta_k`.
    pub g: DVector<f64>,
}

impl CouplingSet {
    pub fn num_sources(&self) -> usize {
        self.f.len()
    }
}

/// Kronecker product of two column vectors, `(a kron b)[i n_b + j] = a_i b_j`.
pub(crate) fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let nb = b.len();
    CVector::from_fn(a.len() * nb, |idx, _| a[idx / nb] * b[idx % nb])
}

/// `I_r kron h^T`.
pub(crate) fn row_selector(h: &CVector) -> CMatrix {
    let r = h.len();
    let mut g = CMatrix::zeros(r, r * r);
    for l in 0..r {
        for i in 0..r {
            g[(l, l * r + i)] = h[i];
        }
    }
    g
}

/// `h^T kron I_r`, the map `vec(B) -> B h`.
pub(crate) fn column_mixer(h: &CVector) -> CMatrix {
    let r = h.len();
    let mut m = CMatrix::zeros(r, r * r);
    for l in 0..r {
        for i in 0..r {
            m[(i, l * r + i)] = h[l];
        }
    }
    m
}

/// Builds `f_k`, `d_kj`, `G_k`, `Phi`, `C` and `g` for the reduced channels.
///
/// `beta` holds one desired-gain value per source.
pub fn build_couplings(
    red: &ReducedChannels,
    powers: &[f64],
    pairing: &PairingMap,
    sigma2: f64,
    beta: &[f64],
) -> Result<CouplingSet> {
    let k_n = red.num_sources();
    let r = red.dim();
    if powers.len() != k_n || pairing.len() != k_n || beta.len() != k_n {
        return Err(Error::InvalidArgument(format!(
            "{k_n} sources but {} powers, {} pairing entries, {} gains",
            powers.len(),
            pairing.len(),
            beta.len()
        )));
    }
    let h: Vec<CVector> = (0..k_n).map(|k| red.effective(k)).collect();
    let n = r * r;
    let mut f = Vec::with_capacity(k_n);
    let mut d = Vec::with_capacity(k_n);
    let mut g_mats = Vec::with_capacity(k_n);
    let mut phi = CMatrix::zeros(n, n);
    let mut c = CMatrix::zeros(n, k_n);
    for k in 0..k_n {
        let kp = pairing.partner(k);
        let fk = kron_vec(&h[kp], &h[k]) * C64::from(Float::sqrt(powers[kp]));
        c.set_column(k, &fk.conjugate());
        f.push(fk);
        let mut dk = Vec::with_capacity(k_n.saturating_sub(2));
        for j in (0..k_n).filter(|&j| j != k && j != kp) {
            let dkj = kron_vec(&h[j], &h[k]) * C64::from(Float::sqrt(powers[j]));
            // R_k += conj(d) d^T
            phi.ger(C64::from(1.0), &dkj.conjugate(), &dkj, C64::from(1.0));
            dk.push((j, dkj));
        }
        d.push(dk);
        // N_k = G_k^H G_k = I kron conj(h~_k) h~_k^T
        let hk = &h[k];
        for l in 0..r {
            for i in 0..r {
                for i2 in 0..r {
                    phi[(l * r + i, l * r + i2)] += hk[i].conj() * hk[i2] * sigma2;
                }
            }
        }
        g_mats.push(row_selector(hk));
    }
    let phi = (&phi + phi.adjoint()) * C64::from(0.5);
    Ok(CouplingSet { f, d, g_mats, phi, c, g: DVector::from_column_slice(beta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::ComplexField;
    use crate::channel::{draw_channels, make_pairing, trial_rng};
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(r: usize, seed: u64) -> CMatrix {
        let mut rng = trial_rng(seed, 99);
        CMatrix::from_fn(r, r, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn vec_stacks_columns() {
        let q = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(3., 0.), c(2., 0.), c(4., 0.)]);
        let b = vec(&q);
        let expect: Vec<C64> = [1., 2., 3., 4.].iter().map(|&x| c(x, 0.)).collect();
        assert_eq!(b.as_slice(), &expect[..]);
        assert_eq!(unvec(&b, 2).unwrap(), q);
        assert!(unvec(&b, 3).is_err());
    }

    #[test]
    fn reduce_identity() {
        let h = CMatrix::identity(2, 2);
        let set = ChannelSet::new(h, make_pairing(2).unwrap(), alloc::vec![1.0, 1.0]).unwrap();
        let red = reduce(&set).unwrap();
        assert!((red.sigma[0] - 1.0).abs() < 1e-12 && (red.sigma[1] - 1.0).abs() < 1e-12);
        // Htilde = U^H, unitary.
        let gram = red.htilde.adjoint() * &red.htilde;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn reduce_diagonal() {
        let h = CMatrix::from_row_slice(3, 2, &[c(2., 0.), c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let set = ChannelSet::new(h, make_pairing(2).unwrap(), alloc::vec![1.0, 1.0]).unwrap();
        let red = reduce(&set).unwrap();
        assert!((red.sigma[0] - 2.0).abs() < 1e-12);
        assert!((red.sigma[1] - 1.0).abs() < 1e-12);
        // up to a phase per coordinate
        assert!((red.htilde[(0, 0)].modulus() - 2.0).abs() < 1e-12);
        assert!(red.htilde[(1, 0)].modulus() < 1e-12);
        assert!((red.htilde[(1, 1)].modulus() - 1.0).abs() < 1e-12);
        assert!(red.htilde[(0, 1)].modulus() < 1e-12);
    }

    #[test]
    fn reduce_reconstructs_random_channel() {
        let set = draw_channels(4, 8, 0.0, &mut trial_rng(5, 1)).unwrap();
        let red = reduce(&set).unwrap();
        let k = 4;
        assert!((red.u.adjoint() * &red.u - CMatrix::identity(k, k)).norm() < 1e-10);
        let sig = CMatrix::from_diagonal(&red.sigma.map(C64::from));
        let rebuilt = &red.u * &sig * red.v.adjoint();
        assert!((rebuilt - &set.uplink).norm() / set.uplink.norm() < 1e-10);
        assert!((&sig * red.v.adjoint() - &red.htilde).norm() < 1e-10);
        assert!(red.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reduce_rejects_rank_deficient() {
        let col = CVector::from_column_slice(&[c(1., 0.), c(0., 1.), c(2., 0.), c(0., 0.)]);
        let h = CMatrix::from_columns(&[col.clone(), col.clone(), col.clone(), col]);
        let set = ChannelSet::new(h, make_pairing(4).unwrap(), alloc::vec![1.0; 4]).unwrap();
        assert!(matches!(reduce(&set), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn lift_basic_cases() {
        let u = CMatrix::identity(2, 2);
        let b = random_matrix(2, 1);
        assert_eq!(lift(&b, &u).unwrap(), b);
        let u8 = draw_channels(4, 8, 0.0, &mut trial_rng(1, 1)).unwrap();
        let red = reduce(&u8).unwrap();
        assert!(lift(&CMatrix::zeros(4, 4), &red.u).unwrap().norm() == 0.0);
        assert!(lift(&CMatrix::zeros(3, 3), &red.u).is_err());
    }

    #[test]
    fn lift_preserves_bilinear_forms() {
        let set = draw_channels(4, 8, 0.0, &mut trial_rng(11, 3)).unwrap();
        let red = reduce(&set).unwrap();
        let b = random_matrix(4, 2);
        let a = lift(&b, &red.u).unwrap();
        for k in 0..4 {
            for j in 0..4 {
                let raw = (set.channel(k).transpose() * &a * set.channel(j))[(0, 0)];
                let eff = (red.effective(k).transpose() * &b * red.effective(j))[(0, 0)];
                assert!((raw - eff).modulus() < 1e-10, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn canonical_coupling_vectors() {
        let red = ReducedChannels::from_effective(CMatrix::identity(2, 2));
        let cs = build_couplings(&red, &[1.0, 1.0], &make_pairing(2).unwrap(), 1.0, &[1.0, 1.0]).unwrap();
        let expect: Vec<C64> = [0., 0., 1., 0.].iter().map(|&x| c(x, 0.)).collect();
        assert_eq!(cs.f[0].as_slice(), &expect[..]);
        let b = random_matrix(2, 7);
        let lhs = (cs.f[0].transpose() * vec(&b))[(0, 0)];
        assert!((lhs - b[(0, 1)]).modulus() < 1e-15);
        assert!(cs.d.iter().all(|dk| dk.is_empty()));
    }

    #[test]
    fn phi_is_hermitian_positive_definite() {
        let set = draw_channels(4, 8, 0.0, &mut trial_rng(9, 0)).unwrap();
        let red = reduce(&set).unwrap();
        let cs = build_couplings(&red, &[10.0; 4], &set.pairing, 1.0, &[1.0; 4]).unwrap();
        assert!((&cs.phi - cs.phi.adjoint()).norm() < 1e-12);
        assert!(cs.phi.clone().cholesky().is_some());
        assert_eq!(cs.c.clone().svd(false, false).rank(1e-10), 4);
    }
}
