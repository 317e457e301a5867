//! Quadratic forms of the stacked precoder `p̄ = [1, p]` whose ratios give
//! every stream's `1 + SINR`.

use super::OptimizerError;
use crate::channel::ChannelSet;
use crate::conic::AffineExpr;
use crate::linalg::{inner_sq, outer};
use crate::{CMatrix, CVector, C64};

/// LEO data stream, in stacking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Private(usize),
    Common,
    SuperCommon,
}

/// Which shared streams a design may use. Private streams are always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamLayout {
    pub common: bool,
    pub super_common: bool,
}

impl StreamLayout {
    pub const FULL: Self = Self {
        common: true,
        super_common: true,
    };
    pub const RSMA: Self = Self {
        common: true,
        super_common: false,
    };
    pub const SDMA: Self = Self {
        common: false,
        super_common: false,
    };

    /// Active streams in stacking order `[p_1, …, p_K, p_c, p_spc]`.
    pub fn streams(&self, k_l: usize) -> Vec<Stream> {
        let mut s: Vec<Stream> = (0..k_l).map(Stream::Private).collect();
        if self.common {
            s.push(Stream::Common);
        }
        if self.super_common {
            s.push(Stream::SuperCommon);
        }
        s
    }
}

/// `blkdiag(scalar, blocks…)`, acting on `[1, p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedForm {
    pub scalar: f64,
    pub blocks: Vec<CMatrix>,
}

impl LiftedForm {
    /// `p̄^H M p̄` for per-stream precoders in stacking order.
    pub fn quadratic(&self, p: &[CVector]) -> f64 {
        self.scalar
            + self
                .blocks
                .iter()
                .zip(p)
                .map(|(m, v)| v.dotc(&(m * v)).re)
                .sum::<f64>()
    }

    /// `tr(M · blkdiag(1, X))`, or `tr(M_X · X)` when the scalar is zero.
    pub fn trace_lifted(&self, x: &CMatrix) -> f64 {
        let mut acc = self.scalar;
        let mut off = 0;
        for m in &self.blocks {
            let n = m.nrows();
            for i in 0..n {
                for j in 0..n {
                    acc += (m[(i, j)] * x[(off + j, off + i)]).re;
                }
            }
            off += n;
        }
        acc
    }

    /// The same trace as an affine expression in `X`.
    pub fn affine(&self) -> AffineExpr {
        let side: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut full = CMatrix::zeros(side, side);
        let mut off = 0;
        for m in &self.blocks {
            let n = m.nrows();
            full.view_mut((off, off), (n, n)).copy_from(m);
            off += n;
        }
        AffineExpr::constant(self.scalar).plus_trace(&full, 1.0)
    }

    /// Dense `(1 + side) × (1 + side)` matrix.
    pub fn dense(&self) -> CMatrix {
        let side: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut out = CMatrix::zeros(side + 1, side + 1);
        out[(0, 0)] = C64::from(self.scalar);
        let mut off = 1;
        for m in &self.blocks {
            let n = m.nrows();
            out.view_mut((off, off), (n, n)).copy_from(m);
            off += n;
        }
        out
    }
}

/// All quadratic forms of one design.
///
/// Per GU: `a` (super-common signal plus everything else) and `b` (without
/// the super-common signal). Per LU: `d` ⪰ `f` ⪰ `q` ⪰ `v`, each removing
/// one more decoded stream. `leakage` gives the leakage power at each GU,
/// including the expected error contribution of every stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrices {
    pub streams: Vec<Stream>,
    pub n_l: usize,
    pub a: Vec<LiftedForm>,
    pub b: Vec<LiftedForm>,
    pub d: Vec<LiftedForm>,
    pub f: Vec<LiftedForm>,
    pub q: Vec<LiftedForm>,
    pub v: Vec<LiftedForm>,
    pub leakage: Vec<LiftedForm>,
}

impl LiftedMatrices {
    pub fn side(&self) -> usize {
        self.n_l * self.streams.len()
    }
}

fn forms(
    channel: &CVector,
    leading: f64,
    sigma_e2: f64,
    streams: &[Stream],
    removed: &[Stream],
) -> LiftedForm {
    let n = channel.len();
    let hh = outer(channel);
    let err = CMatrix::identity(n, n) * C64::from(sigma_e2);
    LiftedForm {
        scalar: leading,
        blocks: streams
            .iter()
            .map(|s| {
                if removed.contains(s) {
                    err.clone()
                } else {
                    &hh + &err
                }
            })
            .collect(),
    }
}

pub fn build_lifted_matrices(
    ch: &ChannelSet,
    geo_precoders: &[CVector],
    layout: StreamLayout,
) -> Result<LiftedMatrices, OptimizerError> {
    ch.check()?;
    let n_g = ch.n_g();
    for w in geo_precoders {
        if w.len() != n_g {
            return Err(OptimizerError::Dimension(format!(
                "GEO precoder of length {} for {} feeds",
                w.len(),
                n_g
            )));
        }
    }
    let beams = geo_precoders.len();
    if ch
        .lu_geo_beam
        .iter()
        .chain(&ch.gu_geo_beam)
        .any(|&b| b >= beams)
    {
        return Err(OptimizerError::Dimension(
            "GEO beam index without a precoder".into(),
        ));
    }
    let streams = StreamLayout::streams(&layout, ch.k_l());
    let s2 = ch.sigma_e2;
    let sn = ch.noise_variance;
    use Stream::*;

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut leakage = Vec::new();
    for k in 0..ch.k_g() {
        let lead = inner_sq(&ch.f[k], &geo_precoders[ch.gu_geo_beam[k]]) + ch.external_gu[k] + sn;
        let z = &ch.z_hat[k];
        a.push(forms(z, lead, s2, &streams, &[]));
        b.push(forms(z, lead, s2, &streams, &[SuperCommon]));
        leakage.push(forms(z, 0.0, s2, &streams, &[SuperCommon]));
    }
    let (mut d, mut f, mut q, mut v) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..ch.k_l() {
        let lead = inner_sq(&ch.g[k], &geo_precoders[ch.lu_geo_beam[k]]) + ch.external_lu[k] + sn;
        let h = &ch.h_hat[k];
        d.push(forms(h, lead, s2, &streams, &[]));
        f.push(forms(h, lead, s2, &streams, &[SuperCommon]));
        q.push(forms(h, lead, s2, &streams, &[SuperCommon, Common]));
        v.push(forms(
            h,
            lead,
            s2,
            &streams,
            &[SuperCommon, Common, Private(k)],
        ));
    }
    Ok(LiftedMatrices {
        streams,
        n_l: ch.n_l(),
        a,
        b,
        d,
        f,
        q,
        v,
        leakage,
    })
}
