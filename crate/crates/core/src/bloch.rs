//! Pauli-basis 4-vectors and the conjugation superoperator of the walk.
//!
//! A 2×2 operator is written `O = ½(o₀ 1 + o⃗·σ⃗)` with `o_i = Tr(O σ_i)`.
//! The pairing `(A|B) = Σ conj(a_i) b_i` satisfies `Tr(A B) = ½ (A†|B)`.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::coin::CoinParams;
use crate::error::{QwfError, Result};
use crate::C64;

/// Band around `|cos ω| = 1` where the eigenvector normalization is unusable.
pub const DEGENERATE_COS_OMEGA: f64 = 1e-9;

/// Which symmetry the source operator was declared to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochKind {
    Hermitian,
    AntiHermitian,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bloch4 {
    pub c: [C64; 4],
    pub kind: BlochKind,
}

fn pauli(i: usize) -> Matrix2<C64> {
    let z = C64::from(0.0);
    let o = C64::from(1.0);
    let im = C64::i();
    match i {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -im, im, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => unreachable!(),
    }
}

impl Bloch4 {
    pub fn general(c: [C64; 4]) -> Self {
        Bloch4 {
            c,
            kind: BlochKind::General,
        }
    }

    /// Vector of a Hermitian operator (real components).
    pub fn real(v: [f64; 4]) -> Self {
        Bloch4 {
            c: v.map(C64::from),
            kind: BlochKind::Hermitian,
        }
    }

    /// Vector of an anti-Hermitian operator, `i·v`.
    pub fn imaginary(v: [f64; 4]) -> Self {
        Bloch4 {
            c: v.map(|x| C64::new(0.0, x)),
            kind: BlochKind::AntiHermitian,
        }
    }

    /// Components of a Hermitian matrix; rejects anything else beyond `tol`.
    pub fn hermitian(m: &Matrix2<C64>, tol: f64) -> Result<Self> {
        let b = to_bloch(m);
        let resid = b.c.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
        if resid > tol {
            return Err(QwfError::InvalidParams(format!(
                "operator is not Hermitian (residue {resid:e})"
            )));
        }
        Ok(Bloch4::real(b.c.map(|z| z.re)))
    }

    pub fn anti_hermitian(m: &Matrix2<C64>, tol: f64) -> Result<Self> {
        let b = to_bloch(m);
        let resid = b.c.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
        if resid > tol {
            return Err(QwfError::InvalidParams(format!(
                "operator is not anti-Hermitian (residue {resid:e})"
            )));
        }
        Ok(Bloch4::imaginary(b.c.map(|z| z.im)))
    }

    pub fn o0(&self) -> C64 {
        self.c[0]
    }

    pub fn spatial(&self) -> [C64; 3] {
        [self.c[1], self.c[2], self.c[3]]
    }

    /// Components of the adjoint operator.
    pub fn adjoint(&self) -> Self {
        let kind = self.kind;
        Bloch4 {
            c: self.c.map(|z| z.conj()),
            kind,
        }
    }

    /// `(self|other)`, conjugate-linear in `self`.
    pub fn dot(&self, other: &Bloch4) -> C64 {
        self.c.iter().zip(&other.c).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).re.sqrt()
    }

    pub fn to_vector(&self) -> Vector4<C64> {
        Vector4::from(self.c)
    }
}

/// `o_i = Tr(O σ_i)`.
pub fn to_bloch(m: &Matrix2<C64>) -> Bloch4 {
    Bloch4::general([
        m[(0, 0)] + m[(1, 1)],
        m[(0, 1)] + m[(1, 0)],
        C64::i() * (m[(0, 1)] - m[(1, 0)]),
        m[(0, 0)] - m[(1, 1)],
    ])
}

/// `O = ½ Σ o_i σ_i`.
pub fn from_bloch(b: &Bloch4) -> Matrix2<C64> {
    let mut m = Matrix2::zeros();
    for (i, c) in b.c.iter().enumerate() {
        m += pauli(i) * (*c * 0.5);
    }
    m
}

fn cross(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn bilinear3(a: [C64; 3], b: [C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `Tr(A B)` from the 4-vectors.
pub fn trace_product(a: &Bloch4, b: &Bloch4) -> C64 {
    a.adjoint().dot(b) * 0.5
}

/// `Tr(A B C)` from the 4-vectors.
pub fn trace_triple(a: &Bloch4, b: &Bloch4, c: &Bloch4) -> C64 {
    let (av, bv, cv) = (a.spatial(), b.spatial(), c.spatial());
    let (a0, b0, c0) = (a.o0(), b.o0(), c.o0());
    (C64::i() * bilinear3(av, cross(bv, cv))
        + a0 * bilinear3(bv, cv)
        + b0 * bilinear3(av, cv)
        + c0 * bilinear3(av, bv)
        + a0 * b0 * c0)
        * 0.25
}

/// `Tr(A {B, C})`.
pub fn trace_anticommutator(a: &Bloch4, b: &Bloch4, c: &Bloch4) -> C64 {
    let (av, bv, cv) = (a.spatial(), b.spatial(), c.spatial());
    let (a0, b0, c0) = (a.o0(), b.o0(), c.o0());
    (a0 * bilinear3(bv, cv) + b0 * bilinear3(av, cv) + c0 * bilinear3(av, bv) + a0 * b0 * c0) * 0.5
}

/// `Tr(A [B, C]) = ½ i a⃗·(b⃗ × c⃗)`.
pub fn trace_commutator(a: &Bloch4, b: &Bloch4, c: &Bloch4) -> C64 {
    C64::i() * bilinear3(a.spatial(), cross(b.spatial(), c.spatial())) * 0.5
}

/// Real 4×4 matrix acting on Bloch 4-vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superop4 {
    pub m: Matrix4<f64>,
}

impl Superop4 {
    pub fn apply(&self, b: &Bloch4) -> Bloch4 {
        let mut out = [C64::from(0.0); 4];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..4 {
                *o += b.c[j] * self.m[(i, j)];
            }
        }
        Bloch4 {
            c: out,
            kind: b.kind,
        }
    }

    /// `(a| M |b)`.
    pub fn quad_form(&self, a: &Bloch4, b: &Bloch4) -> C64 {
        a.dot(&self.apply(b))
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Lower-right 3×3 block.
    pub fn spatial_block(&self) -> nalgebra::Matrix3<f64> {
        self.m.fixed_view::<3, 3>(1, 1).into_owned()
    }
}

/// `Ã_k`: the matrix of `O ↦ u_k O u_k†` on 4-vectors.
pub fn superop_matrix(p: &CoinParams, k: f64) -> Superop4 {
    let (s, c) = p.theta().sin_cos();
    let (s2, c2) = (s * s, c * c);
    let sin2t = 2.0 * s * c;
    let ka = k - p.alpha();
    let kb = k - p.beta();
    let ab = p.alpha() - p.beta();
    let kk = 2.0 * k - p.alpha() - p.beta();
    let (s2a, c2a) = (2.0 * ka).sin_cos();
    let (s2b, c2b) = (2.0 * kb).sin_cos();
    #[rustfmt::skip]
    let m = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0, c2a * c2 - c2b * s2, -s2a * c2 - s2b * s2, -kk.cos() * sin2t,
        0.0, s2a * c2 - s2b * s2, c2a * c2 + c2b * s2, -kk.sin() * sin2t,
        0.0, ab.cos() * sin2t, ab.sin() * sin2t, c2 - s2,
    );
    Superop4 { m }
}

/// Eigen-structure of `Ã_k`: eigenvalues `1, 1, e^{2iω}, e^{−2iω}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectral {
    pub omega: f64,
    pub cos_omega: f64,
    pub eigenvalues: [C64; 4],
    /// Unit eigenvectors spanning the eigenvalue-1 subspace.
    pub lambda1: [f64; 4],
    pub lambda2: [f64; 4],
}

pub fn spectral(p: &CoinParams, k: f64) -> Result<Spectral> {
    let (s, c) = p.theta().sin_cos();
    let cos_omega = (k - p.alpha()).cos() * c;
    if cos_omega.abs() >= 1.0 - DEGENERATE_COS_OMEGA {
        return Err(QwfError::DegenerateK { k, cos_omega });
    }
    let omega = cos_omega.acos();
    let tail = [
        (k - p.beta()).sin() * s,
        -(k - p.beta()).cos() * s,
        (k - p.alpha()).sin() * c,
    ];
    let vec = |sign: f64| {
        let n = 1.0 / (2.0 * (1.0 + sign * cos_omega)).sqrt();
        [
            (cos_omega + sign) * n,
            tail[0] * n,
            tail[1] * n,
            tail[2] * n,
        ]
    };
    Ok(Spectral {
        omega,
        cos_omega,
        eigenvalues: [
            C64::from(1.0),
            C64::from(1.0),
            C64::from_polar(1.0, 2.0 * omega),
            C64::from_polar(1.0, -2.0 * omega),
        ],
        lambda1: vec(-1.0),
        lambda2: vec(1.0),
    })
}

/// `A¹ₖ`, the projector onto the eigenvalue-1 subspace of `Ã_k`, in closed form.
///
/// Written as `e₀e₀ᵀ + w wᵀ/‖w‖²` with `w = (sinθ sin(k−β), −sinθ cos(k−β), cosθ sin(k−α))`,
/// which avoids the `cot θ` factors and stays finite whenever `sin θ ≠ 0`.
pub fn projector_a1(p: &CoinParams, k: f64) -> Superop4 {
    let (s, c) = p.theta().sin_cos();
    let (sb, cb) = (k - p.beta()).sin_cos();
    let sa = (k - p.alpha()).sin();
    let w = [s * sb, -s * cb, c * sa];
    let inv = 1.0 / (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    let mut m = Matrix4::zeros();
    m[(0, 0)] = 1.0;
    for i in 0..3 {
        for j in 0..3 {
            m[(i + 1, j + 1)] = w[i] * w[j] * inv;
        }
    }
    Superop4 { m }
}

/// `A¹ₖ = |λ₁⟩⟨λ₁| + |λ₂⟩⟨λ₂|` from the eigenvectors; fails near degenerate nodes.
pub fn projector_from_eigenvectors(p: &CoinParams, k: f64) -> Result<Superop4> {
    let sp = spectral(p, k)?;
    let l1 = Vector4::from(sp.lambda1);
    let l2 = Vector4::from(sp.lambda2);
    Ok(Superop4 {
        m: l1 * l1.transpose() + l2 * l2.transpose(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rand_matrix(rng: &mut impl Rng) -> Matrix2<C64> {
        Matrix2::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn rand_params(rng: &mut impl Rng) -> CoinParams {
        CoinParams::new(
            rng.gen_range(0.05..PI - 0.05),
            rng.gen_range(-PI..PI),
            rng.gen_range(-PI..PI),
        )
        .unwrap()
    }

    fn max_abs(m: &Matrix2<C64>) -> f64 {
        m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    #[test]
    fn basic_vectors() {
        let b = to_bloch(&Matrix2::identity());
        assert_eq!(b.c, [2.0, 0.0, 0.0, 0.0].map(C64::from));
        let b = to_bloch(&pauli(3));
        assert_eq!(b.c, [0.0, 0.0, 0.0, 2.0].map(C64::from));
        let b = to_bloch(&pauli(2));
        assert_eq!(b.c, [0.0, 0.0, 2.0, 0.0].map(C64::from));
    }

    #[test]
    fn round_trip_and_trace_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (a, b, c) = (
                rand_matrix(&mut rng),
                rand_matrix(&mut rng),
                rand_matrix(&mut rng),
            );
            let (ba, bb, bc) = (to_bloch(&a), to_bloch(&b), to_bloch(&c));
            assert!(max_abs(&(from_bloch(&ba) - a)) <= 1e-15);
            assert!((trace_product(&ba, &bb) - (a * b).trace()).norm() < 1e-13);
            assert!((trace_triple(&ba, &bb, &bc) - (a * b * c).trace()).norm() < 1e-12);
            assert!(
                (trace_anticommutator(&ba, &bb, &bc) - (a * (b * c + c * b)).trace()).norm()
                    < 1e-12
            );
            assert!(
                (trace_commutator(&ba, &bb, &bc) - (a * (b * c - c * b)).trace()).norm() < 1e-12
            );
        }
    }

    #[test]
    fn symmetry_tags() {
        let h = Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(0.3, 0.2),
            C64::new(0.3, -0.2),
            C64::new(-0.5, 0.0),
        );
        assert_eq!(
            Bloch4::hermitian(&h, 1e-14).unwrap().kind,
            BlochKind::Hermitian
        );
        assert!(Bloch4::anti_hermitian(&h, 1e-14).is_err());
        let ah = h * C64::i();
        let b = Bloch4::anti_hermitian(&ah, 1e-14).unwrap();
        assert!(b.c.iter().all(|z| z.re == 0.0));
        assert!(Bloch4::hermitian(&ah, 1e-14).is_err());
    }

    #[test]
    fn superop_matches_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let p = rand_params(&mut rng);
            let k = rng.gen_range(-PI..PI);
            let u = p.u_k(k);
            let o = rand_matrix(&mut rng);
            let lhs = to_bloch(&(u * o * u.adjoint()));
            let rhs = superop_matrix(&p, k).apply(&to_bloch(&o));
            for i in 0..4 {
                worst = worst.max((lhs.c[i] - rhs.c[i]).norm());
            }
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn superop_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = rand_params(&mut rng);
            let a = superop_matrix(&p, rng.gen_range(-PI..PI));
            for i in 1..4 {
                assert_eq!(a.m[(0, i)], 0.0);
                assert_eq!(a.m[(i, 0)], 0.0);
            }
            assert_eq!(a.m[(0, 0)], 1.0);
            let r = a.spatial_block();
            assert!(
                (r.transpose() * r - nalgebra::Matrix3::identity())
                    .abs()
                    .max()
                    < 1e-12
            );
        }
        // at θ = π/2 only the sin²θ terms survive in the spatial block
        let p = CoinParams::new(PI / 2.0, 0.4, -0.9).unwrap();
        let k = 0.7;
        let a = superop_matrix(&p, k);
        let kb = k - p.beta();
        assert!((a.m[(1, 1)] + (2.0 * kb).cos()).abs() < 1e-15);
        assert!((a.m[(1, 2)] + (2.0 * kb).sin()).abs() < 1e-15);
        assert!((a.m[(2, 2)] - (2.0 * kb).cos()).abs() < 1e-15);
        assert!((a.m[(3, 3)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvectors_are_fixed_and_match_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = rand_params(&mut rng);
            let k = rng.gen_range(-PI..PI);
            let a = superop_matrix(&p, k);
            let sp = spectral(&p, k).unwrap();
            for l in [sp.lambda1, sp.lambda2] {
                let v = Vector4::from(l);
                assert!((a.m * v - v).abs().max() < 1e-12);
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            assert!(
                Vector4::from(sp.lambda1)
                    .dot(&Vector4::from(sp.lambda2))
                    .abs()
                    < 1e-12
            );
            // independent route: null space of Ã − 1 by SVD
            let svd = (a.m - Matrix4::identity()).svd(true, true);
            let vt = svd.v_t.unwrap();
            let mut null = Vec::new();
            for (i, sv) in svd.singular_values.iter().enumerate() {
                if *sv < 1e-10 {
                    null.push(vt.row(i).transpose());
                }
            }
            assert_eq!(null.len(), 2);
            let p_svd = null
                .iter()
                .fold(Matrix4::zeros(), |acc, v| acc + v * v.transpose());
            assert!((p_svd - projector_a1(&p, k).m).abs().max() < 1e-10);
            for e in sp.eigenvalues {
                assert!((e.norm() - 1.0).abs() < 1e-15);
            }
        }
        let p = CoinParams::new(PI / 2.0, 0.3, 0.1).unwrap();
        let sp = spectral(&p, 1.1).unwrap();
        assert!((sp.omega - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_node_is_reported() {
        let p = CoinParams::new(0.3, 0.5, 0.0).unwrap();
        assert!(spectral(&p, 0.6).is_ok());
        // cos ω = cos θ cos(k − α) never reaches 1 for sin θ ≠ 0, so force it with a tiny θ
        let p = CoinParams::new(1e-5, 0.5, 0.0).unwrap();
        assert!(matches!(
            spectral(&p, 0.5),
            Err(QwfError::DegenerateK { .. })
        ));
        assert!(projector_a1(&p, 0.5).m.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn projector_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = crate::quadrature::KGrid::uniform(512);
        for _ in 0..10 {
            let p = rand_params(&mut rng);
            for &k in &grid.nodes {
                let a1 = projector_a1(&p, k).m;
                let a = superop_matrix(&p, k).m;
                assert!((a1 * a1 - a1).abs().max() <= 1e-12);
                assert!((a * a1 - a1).abs().max() <= 1e-12);
                assert!((a1 * a - a1).abs().max() <= 1e-12);
                assert!((a1.trace() - 2.0).abs() <= 1e-12);
                if let Ok(e) = projector_from_eigenvectors(&p, k) {
                    assert!((e.m - a1).abs().max() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn projector_matches_printed_entries() {
        let p = CoinParams::new(0.9, 0.4, -1.3).unwrap();
        let k = 0.35;
        let (th, al, be) = (p.theta(), p.alpha(), p.beta());
        let n = th.sin().powi(2) / (1.0 - th.cos().powi(2) * (k - al).cos().powi(2));
        let cot = 1.0 / th.tan();
        let a1 = projector_a1(&p, k).m;
        assert!((a1[(1, 1)] - n * (k - be).sin().powi(2)).abs() < 1e-14);
        assert!((a1[(1, 2)] + n * (k - be).cos() * (k - be).sin()).abs() < 1e-14);
        assert!((a1[(1, 3)] - n * cot * (k - be).sin() * (k - al).sin()).abs() < 1e-14);
        assert!((a1[(2, 3)] + n * cot * (k - be).cos() * (k - al).sin()).abs() < 1e-14);
        assert!((a1[(3, 3)] - n * cot * cot * (k - al).sin().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn rotating_eigenvectors_are_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let p = rand_params(&mut rng);
            let k = rng.gen_range(-PI..PI);
            let a = superop_matrix(&p, k);
            let a1 = projector_a1(&p, k);
            let sp = spectral(&p, k).unwrap();
            // build the complex eigenvectors from a basis orthogonal to the rotation axis
            let axis =
                nalgebra::Vector3::new(sp.lambda1[1], sp.lambda1[2], sp.lambda1[3]).normalize();
            let trial = if axis.x.abs() < 0.9 {
                nalgebra::Vector3::x()
            } else {
                nalgebra::Vector3::y()
            };
            let u = (trial - axis * axis.dot(&trial)).normalize();
            let v = axis.cross(&u);
            for sign in [1.0, -1.0] {
                let e = Bloch4::general([
                    C64::from(0.0),
                    C64::new(u.x, sign * v.x),
                    C64::new(u.y, sign * v.y),
                    C64::new(u.z, sign * v.z),
                ]);
                let ae = a.apply(&e);
                let ratio = ae.c[1] / e.c[1];
                assert!((ratio.norm() - 1.0).abs() < 1e-10);
                assert!(
                    (ratio - sp.eigenvalues[2]).norm() < 1e-10
                        || (ratio - sp.eigenvalues[3]).norm() < 1e-10
                );
                assert!(a1.apply(&e).norm() < 1e-10);
            }
        }
    }
}
