use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::Result;
use crate::fisher::hstack;
use crate::{linalg, CMatrix};

/// Gram matrices with a larger condition number are treated as rank deficient.
pub const MAX_GRAM_CONDITION: f64 = 1e12;
const SPAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceKind {
    /// `[H_c, V^*, V̇x^*, V̇y^*, V̇z^*]`, dimension `4K + U`.
    SensingCommCrb,
    /// `[H_c, V^*]`, dimension `K + U`.
    SensingCommPower,
}

impl SubspaceKind {
    pub fn dimension(self, targets: usize, users: usize) -> usize {
        match self {
            SubspaceKind::SensingCommCrb => 4 * targets + users,
            SubspaceKind::SensingCommPower => targets + users,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// Block-normalized stack `X (X^H X)^{-1/2}` per block.
    pub u_raw: CMatrix,
    pub q_orth: CMatrix,
    /// `Q^H U_raw`; upper triangular when no column was dropped.
    pub r_factor: CMatrix,
    pub kind: SubspaceKind,
    pub dropped_columns: usize,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.q_orth.ncols()
    }
}

/// Unnormalized generating blocks of the subspace in transmit coordinates.
pub fn generating_blocks(ch: &ChannelSet, kind: SubspaceKind) -> Vec<CMatrix> {
    let mut blocks = Vec::new();
    if ch.num_users() > 0 {
        blocks.push(ch.hc.clone());
    }
    blocks.push(ch.v.conjugate());
    if kind == SubspaceKind::SensingCommCrb {
        for d in &ch.dv {
            blocks.push(d.conjugate());
        }
    }
    blocks
}

pub fn build_subspace(ch: &ChannelSet, kind: SubspaceKind) -> Result<SubspaceBasis> {
    let mut dropped = 0;
    let normalized: Vec<CMatrix> = generating_blocks(ch, kind)
        .into_iter()
        .map(|x| {
            let gram = linalg::hermitian_part(&(x.adjoint() * &x));
            match linalg::inverse_sqrt(&gram, MAX_GRAM_CONDITION) {
                Some(s) => x * s,
                None => {
                    let q = linalg::orthonormal_span(&x, SPAN_TOL);
                    dropped += x.ncols() - q.ncols();
                    q
                }
            }
        })
        .collect();
    let refs: Vec<&CMatrix> = normalized.iter().collect();
    let u_raw = hstack(&refs);
    let q_orth = linalg::orthonormal_span(&u_raw, SPAN_TOL);
    dropped += u_raw.ncols() - q_orth.ncols();
    let r_factor = q_orth.adjoint() * &u_raw;
    Ok(SubspaceBasis { u_raw, q_orth, r_factor, kind, dropped_columns: dropped })
}
