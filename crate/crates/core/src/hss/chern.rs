//! First-principles Chern connection of an invariant metric on a
//! Calabi–Eckmann type C-space `G_1·G_2 / L_1·L_2` with Grassmannian factors.
//!
//! The tangent space at the base point is `m = f ⊕ n_1 ⊕ n_2`, realized inside
//! block-diagonal matrices of `sl(N_1) ⊕ sl(N_2)`. The fibre `f` is spanned by
//! the centre elements `Z_1, Z_2`, which serve as its real basis `X_1, X_2`.
//! The Nomizu operator is assembled from three conditions only: it preserves
//! `m^{10}`, it is skew for the metric, and `Λ(A)B̄ = [A, B̄]_m^{01}` for
//! `A, B ∈ m^{10}` (no mixed torsion). Torsion and curvature follow from the
//! reductive-space formulas, and the Ricci-type traces are taken over an
//! `h`-unitary basis of `m^{10}`. Every closed-form statement used by the flow
//! is then compared against these brute-force tensors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::roots::{bracket, conj_su, grassmannian_realization, RootRealization};
use crate::error::{Error, Result};
use crate::flow::k_tensor;
use crate::linalg::{self, c, real, CMatrix, CVector, HermitianEigen, I};
use crate::model::{
    build_cspace, fiber_coeffs_from_complex_structure, CSpaceModel, ComplexStructureInput, FactorKind, FactorSpec,
    InvariantMetric,
};
use crate::report::ResidualReport;

/// Two Grassmannian blocks plus a complex structure on the real plane
/// spanned by their centre elements.
#[derive(Debug, Clone)]
pub struct CERealization {
    pub blocks: [RootRealization; 2],
    pub complex_structure: ComplexStructureInput,
}

impl CERealization {
    /// `i_f` is the 2×2 fibre complex structure in the basis `(Z_1, Z_2)`.
    pub fn new(first: (usize, usize), second: (usize, usize), i_f: DMatrix<f64>) -> Result<Self> {
        let input = ComplexStructureInput {
            zf_coords: vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])],
            i_f,
        };
        Self::with_structure(first, second, input)
    }

    /// General fibre data: `zf_coords` are the coordinates of `Z_1, Z_2` in a
    /// real basis `X_1, X_2` of `f`, and `i_f` is written in that basis.
    pub fn with_structure(first: (usize, usize), second: (usize, usize), input: ComplexStructureInput) -> Result<Self> {
        let blocks = [grassmannian_realization(first.0, first.1)?, grassmannian_realization(second.0, second.1)?];
        if input.i_f.nrows() != 2 || input.i_f.ncols() != 2 || input.zf_coords.len() != 2 {
            return Err(Error::ShapeMismatch("Calabi–Eckmann fibre data must be two-dimensional".into()));
        }
        let ce = CERealization { blocks, complex_structure: input };
        ce.fiber_spec()?;
        if ce.z_to_x().try_inverse().is_none() {
            return Err(Error::DegenerateBasis);
        }
        Ok(ce)
    }

    /// Columns: coordinates of `Z_1, Z_2` in the real basis.
    fn z_to_x(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.complex_structure.zf_coords)
    }

    /// `CP^2 × CP^2` blocks with `I_F Z_1 = Z_2`.
    pub fn ce25() -> Self {
        Self::new((1, 2), (1, 2), DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).expect("CE25 realization")
    }

    /// Realization of a two-factor Grassmannian model with `k = 1`.
    ///
    /// `(Z_j)_f^{01} = w_j V̄` with `w_j = 2 i n_j c^j`, so in the real basis
    /// `(X, I_F X)` the centre components are `(Re w_j, −Im w_j)`.
    pub fn from_model(model: &CSpaceModel) -> Result<Self> {
        let grass: Vec<(usize, usize)> = model
            .factors()
            .iter()
            .filter_map(|f| match f.kind {
                FactorKind::Grassmannian { p, q } => Some((p, q)),
                _ => None,
            })
            .collect();
        if model.s() != 2 || model.k() != 1 || grass.len() != 2 {
            return Err(Error::ShapeMismatch("Chern verification needs two Grassmannian factors and k=1".into()));
        }
        let w: Vec<Complex64> =
            model.fiber().c.iter().zip(model.dims()).map(|(cj, n)| cj[0] * I * (2.0 * n as f64)).collect();
        let input = ComplexStructureInput {
            zf_coords: w.iter().map(|wj| DVector::from_vec(vec![wj.re, -wj.im])).collect(),
            i_f: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        };
        Self::with_structure(grass[0], grass[1], input)
    }

    pub fn factors(&self, a: [f64; 2]) -> Vec<FactorSpec> {
        self.blocks.iter().zip(a).map(|(b, a)| FactorSpec::grassmannian(b.p, b.q, a)).collect()
    }

    pub fn fiber_spec(&self) -> Result<crate::model::FiberSpec> {
        fiber_coeffs_from_complex_structure(&self.complex_structure, &self.factors([1.0, 1.0]))
    }

    /// The abstract model this realization represents, with initial base coefficients `a`.
    pub fn model(&self, a: [f64; 2]) -> Result<CSpaceModel> {
        build_cspace(self.factors(a), self.fiber_spec()?)?.with_ce_pairs(vec![(0, 1)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Fiber,
    Root { block: usize, idx: usize },
}

/// Tangent space `m^c` with its metric, brackets and the Nomizu operator.
struct Engine<'a> {
    ce: &'a CERealization,
    size: usize,
    offsets: [usize; 2],
    /// `d = dim_C m`; coordinates are `[b_1..b_d, b̄_1..b̄_d]`.
    d: usize,
    slots: Vec<Slot>,
    basis: Vec<CMatrix>,
    z: [CMatrix; 2],
    /// Columns `V_1, V̄_1` in the real basis `(Z_1, Z_2)`.
    fiber_frame_inv: CMatrix,
    h_base: [f64; 2],
    g: CMatrix,
    lambda: Vec<CMatrix>,
}

impl<'a> Engine<'a> {
    fn new(ce: &'a CERealization, metric: &InvariantMetric) -> Self {
        let [b0, b1] = &ce.blocks;
        let offsets = [0, b0.n];
        let size = b0.n + b1.n;
        let embed = |blk: usize, m: &CMatrix| {
            let mut out = CMatrix::zeros(size, size);
            let off = offsets[blk];
            out.view_mut((off, off), (m.nrows(), m.ncols())).copy_from(m);
            out
        };
        let z = [embed(0, &b0.z), embed(1, &b1.z)];

        // fibre data rewritten in the basis (Z_1, Z_2)
        let p = ce.z_to_x();
        let p_inv = p.clone().try_inverse().expect("checked on construction");
        let i_f = (&p_inv * &ce.complex_structure.i_f * &p).map(|x| c(x, 0.0));
        let x1 = p_inv.column(0).map(|x| c(x, 0.0));
        let jx1 = &i_f * &x1;
        let v = (&x1 - jx1.map(|w| w * I)).scale(0.5);
        let vbar = (&x1 + jx1.map(|w| w * I)).scale(0.5);
        let frame = CMatrix::from_columns(&[v.clone(), vbar]);
        let fiber_frame_inv = frame.try_inverse().expect("fibre frame invertible");
        let v_mat = &z[0] * v[0] + &z[1] * v[1];

        let mut slots = vec![Slot::Fiber];
        let mut basis10 = vec![v_mat];
        for (blk, r) in ce.blocks.iter().enumerate() {
            for (idx, e) in r.e_pos.iter().enumerate() {
                slots.push(Slot::Root { block: blk, idx });
                basis10.push(embed(blk, e));
            }
        }
        let d = basis10.len();
        let mut basis = basis10.clone();
        basis.extend(basis10.iter().map(conj_su));

        let h_base = [metric.h_base()[0], metric.h_base()[1]];
        let mut eng = Engine {
            ce,
            size,
            offsets,
            d,
            slots,
            basis,
            z,
            fiber_frame_inv,
            h_base,
            g: CMatrix::zeros(2 * d, 2 * d),
            lambda: Vec::new(),
        };
        eng.g = eng.build_metric(metric.h_fiber()[(0, 0)]);
        eng.lambda = eng.build_nomizu();
        eng
    }

    fn block<'m>(&self, x: &'m CMatrix, blk: usize) -> nalgebra::DMatrixView<'m, Complex64> {
        let n = self.ce.blocks[blk].n;
        x.view((self.offsets[blk], self.offsets[blk]), (n, n))
    }

    fn kappa_block(&self, x: &CMatrix, y: &CMatrix, blk: usize) -> Complex64 {
        (self.block(x, blk) * self.block(y, blk)).trace() * self.ce.blocks[blk].kappa_scale
    }

    fn kappa(&self, x: &CMatrix, y: &CMatrix) -> Complex64 {
        self.kappa_block(x, y, 0) + self.kappa_block(x, y, 1)
    }

    fn embed(&self, blk: usize, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.size, self.size);
        let off = self.offsets[blk];
        out.view_mut((off, off), (m.nrows(), m.ncols())).copy_from(m);
        out
    }

    /// Coordinates of the `m`-component of `x` (projection along `l = s_1 ⊕ s_2`).
    fn coords(&self, x: &CMatrix) -> CVector {
        let d = self.d;
        let mut out = CVector::zeros(2 * d);
        let zeta = CVector::from_fn(2, |r, _| {
            self.kappa_block(x, &self.z[r], r) / self.kappa_block(&self.z[r], &self.z[r], r)
        });
        let f = &self.fiber_frame_inv * zeta;
        out[0] = f[0];
        out[d] = f[1];
        for (a, slot) in self.slots.iter().enumerate() {
            if let Slot::Root { block, idx } = *slot {
                let r = &self.ce.blocks[block];
                let e_neg = self.embed(block, &r.e_neg[idx]);
                let e_pos = self.embed(block, &r.e_pos[idx]);
                out[a] = self.kappa(x, &e_neg);
                // b̄_a = conj(E_α) = −E_{−α}
                out[d + a] = -self.kappa(x, &e_pos);
            }
        }
        out
    }

    fn matrix(&self, v: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(self.size, self.size);
        for (coef, b) in v.iter().zip(&self.basis) {
            if *coef != Complex64::new(0.0, 0.0) {
                out += b * *coef;
            }
        }
        out
    }

    fn conj(&self, v: &CVector) -> CVector {
        let d = self.d;
        CVector::from_fn(2 * d, |i, _| if i < d { v[d + i].conj() } else { v[i - d].conj() })
    }

    fn unit(&self, i: usize) -> CVector {
        let mut v = CVector::zeros(2 * self.d);
        v[i] = real(1.0);
        v
    }

    fn part10(&self, v: &CVector) -> CVector {
        CVector::from_fn(2 * self.d, |i, _| if i < self.d { v[i] } else { real(0.0) })
    }

    fn part01(&self, v: &CVector) -> CVector {
        CVector::from_fn(2 * self.d, |i, _| if i >= self.d { v[i] } else { real(0.0) })
    }

    fn h(&self, x: &CVector, y: &CVector) -> Complex64 {
        (x.transpose() * &self.g * y)[(0, 0)]
    }

    /// Bilinear extension of the metric: `−h_i κ` on `n_i^c`, `H` on `f^c`.
    fn build_metric(&self, h_ff: Complex64) -> CMatrix {
        let dd = 2 * self.d;
        let mut g = CMatrix::zeros(dd, dd);
        g[(0, self.d)] = h_ff;
        g[(self.d, 0)] = h_ff;
        for a in 0..dd {
            for b in 0..dd {
                if let (Slot::Root { block: ba, .. }, Slot::Root { block: bb, .. }) =
                    (self.slots[a % self.d], self.slots[b % self.d])
                {
                    if ba == bb {
                        g[(a, b)] = self.kappa_block(&self.basis[a], &self.basis[b], ba) * (-self.h_base[ba]);
                    }
                }
            }
        }
        g
    }

    /// `M_AB = h(b_A, b̄_B)`
    fn hermitian_block(&self) -> CMatrix {
        self.g.view((0, self.d), (self.d, self.d)).into_owned()
    }

    fn build_nomizu(&self) -> Vec<CMatrix> {
        let d = self.d;
        let dd = 2 * d;
        let m = self.hermitian_block();
        let mt_lu = m.transpose().lu();
        let m_lu = m.clone().lu();
        let mut out = Vec::with_capacity(dd);
        for a in 0..dd {
            let mut lam = CMatrix::zeros(dd, dd);
            let holo = a < d;
            // Columns fixed by the torsion condition.
            for b in 0..d {
                let col = if holo { d + b } else { b };
                let br = self.coords(&bracket(&self.basis[a], &self.basis[col]));
                let part = if holo { self.part01(&br) } else { self.part10(&br) };
                lam.set_column(col, &part);
            }
            // Remaining columns from metric compatibility.
            for b in 0..d {
                let col = if holo { b } else { d + b };
                let rhs = CVector::from_fn(d, |cc, _| {
                    let other = if holo { d + cc } else { cc };
                    -(self.unit(col).transpose() * &self.g * lam.column(other))[(0, 0)]
                });
                let sol = if holo { mt_lu.solve(&rhs) } else { m_lu.solve(&rhs) }.expect("metric is non-degenerate");
                let mut full = CVector::zeros(dd);
                for cc in 0..d {
                    full[if holo { cc } else { d + cc }] = sol[cc];
                }
                lam.set_column(col, &full);
            }
            out.push(lam);
        }
        out
    }

    fn lam(&self, v: &CVector) -> CMatrix {
        let dd = 2 * self.d;
        let mut out = CMatrix::zeros(dd, dd);
        for (coef, l) in v.iter().zip(&self.lambda) {
            if *coef != Complex64::new(0.0, 0.0) {
                out += l * *coef;
            }
        }
        out
    }

    /// `ad(x)` restricted to `m^c`, in coordinates.
    fn ad(&self, x: &CMatrix) -> CMatrix {
        let dd = 2 * self.d;
        let mut out = CMatrix::zeros(dd, dd);
        for b in 0..dd {
            out.set_column(b, &self.coords(&bracket(x, &self.basis[b])));
        }
        out
    }

    fn torsion(&self, x: &CVector, y: &CVector) -> CVector {
        self.lam(x) * y - self.lam(y) * x - self.coords(&bracket(&self.matrix(x), &self.matrix(y)))
    }

    fn curvature(&self, x: &CVector, y: &CVector) -> CMatrix {
        let (lx, ly) = (self.lam(x), self.lam(y));
        let br = bracket(&self.matrix(x), &self.matrix(y));
        let br_m = self.coords(&br);
        let br_l = &br - self.matrix(&br_m);
        &lx * &ly - &ly * &lx - self.lam(&br_m) - self.ad(&br_l)
    }

    /// Coordinates of `E_α`, `E_{−α}` and `conj(E_α)` for a root slot.
    fn root(&self, slot: usize) -> (CVector, CVector, CVector) {
        let e = self.unit(slot);
        let bar = self.unit(self.d + slot);
        (e, -bar.clone(), bar)
    }

    fn root_slots(&self, block: usize) -> Vec<usize> {
        (0..self.d).filter(|&a| matches!(self.slots[a], Slot::Root { block: b, .. } if b == block)).collect()
    }

    fn slot_index(&self, slot: usize) -> (usize, usize) {
        match self.slots[slot] {
            Slot::Root { block, idx } => (block, idx),
            Slot::Fiber => unreachable!("fibre slot has no root"),
        }
    }

    /// Coordinates of the `m`-component of `H_α`.
    fn coroot_m(&self, slot: usize) -> CVector {
        let (block, idx) = self.slot_index(slot);
        self.coords(&self.embed(block, &self.ce.blocks[block].h_co[idx]))
    }

    /// Unitary basis `u_1..u_d` of `m^{10}` (coordinates of the columns).
    fn unitary_frame(&self) -> Vec<CVector> {
        let eig = HermitianEigen::new(&self.hermitian_block().transpose());
        (0..self.d)
            .map(|a| {
                let col = eig.vectors.column(a) / c(eig.values[a].sqrt(), 0.0);
                CVector::from_fn(2 * self.d, |i, _| if i < self.d { col[i] } else { real(0.0) })
            })
            .collect()
    }
}

fn vmax(v: &CVector) -> f64 {
    linalg::max_abs_vec(v)
}

/// Compares the brute-force Chern tensors with their closed forms.
pub fn verify_chern_tensors(ce: &CERealization, metric: &InvariantMetric) -> Result<ResidualReport> {
    if metric.h_base().len() != 2 || metric.h_fiber().nrows() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "Calabi–Eckmann realization needs s=2, k=1; metric has s={}, k={}",
            metric.h_base().len(),
            metric.h_fiber().nrows()
        )));
    }
    let eng = Engine::new(ce, metric);
    let d = eng.d;
    let mut rep = ResidualReport::new();

    let w = eng.unit(0);
    let w_bar = eng.unit(d);
    let fiber_c = [w.clone(), w_bar.clone()];
    let all_roots: Vec<usize> = (1..d).collect();

    // Structural checks of the constructed connection.
    for a in 0..2 * d {
        let ea = eng.unit(a);
        let la = eng.lam(&ea);
        let la_conj = eng.lam(&eng.conj(&ea));
        for b in 0..2 * d {
            let eb = eng.unit(b);
            let lb = &la * &eb;
            for cc in 0..2 * d {
                let ec = eng.unit(cc);
                let v = eng.h(&lb, &ec) + eng.h(&eb, &(&la * &ec));
                rep.record("nomizu_metric_compatibility", v.norm());
            }
            let lhs = &la_conj * eng.conj(&eb);
            rep.record("nomizu_reality", vmax(&(lhs - eng.conj(&lb))));
        }
    }
    for a in 0..d {
        for b in 0..d {
            let t = eng.torsion(&eng.unit(a), &eng.unit(d + b));
            rep.record("torsion_mixed_type_vanishes", vmax(&t));
        }
    }
    for ell in l_basis(&eng) {
        let ad_l = eng.ad(&ell);
        for a in 0..2 * d {
            let ea = eng.unit(a);
            let lhs = &ad_l * eng.lam(&ea) - eng.lam(&ea) * &ad_l;
            let rhs = eng.lam(&eng.coords(&bracket(&ell, &eng.matrix(&ea))));
            rep.record("nomizu_l_equivariance", linalg::max_abs(&(lhs - rhs)));
        }
    }

    // Fibre coefficients: H_α^{01} = Σ c^j_l V̄_l.
    let fiber = ce.fiber_spec()?;
    for blk in 0..2 {
        for &sa in &eng.root_slots(blk) {
            let hm = eng.coroot_m(sa);
            rep.record("coroot_01_matches_fibre_coefficients", (hm[d] - fiber.c[blk][0]).norm());
        }
    }

    // Nomizu operator.
    for blk in 0..2 {
        let hi = eng.h_base[blk];
        let mine = eng.root_slots(blk);
        let other = eng.root_slots(1 - blk);
        for &sa in &mine {
            let (ea, e_na, _) = eng.root(sa);
            let la = eng.lam(&ea);
            for &sb in &mine {
                let (eb, e_nb, _) = eng.root(sb);
                rep.record("lambda_a_E_alpha_E_beta", vmax(&(&la * &eb)));
                if sb != sa {
                    rep.record("lambda_b_E_alpha_E_minus_beta", vmax(&(&la * &e_nb)));
                }
            }
            for &sg in &other {
                let (eg, e_ng, _) = eng.root(sg);
                rep.record("lambda_a_E_alpha_E_pm_gamma", vmax(&(&la * &eg)).max(vmax(&(&la * &e_ng))));
            }
            rep.record("lambda_a_E_alpha_w_bar", vmax(&(&la * &w_bar)));
            let h01 = eng.part01(&eng.coroot_m(sa));
            rep.record("lambda_b_E_alpha_E_minus_alpha", vmax(&(&la * &e_na - &h01)));
            let hw = eng.h(&w, &eng.coroot_m(sa));
            let expect = ea.map(|z| z * hw / hi);
            rep.record("lambda_c_E_alpha_w", vmax(&(&la * &w - expect)));
        }
    }
    for v in &fiber_c {
        let ad_v = eng.ad(&eng.matrix(v));
        rep.record("lambda_d_fibre_is_ad", linalg::max_abs(&(eng.lam(v) - ad_v)));
    }

    // Torsion.
    for blk in 0..2 {
        let hi = eng.h_base[blk];
        for &sa in &eng.root_slots(blk) {
            let (ea, _, _) = eng.root(sa);
            for &sb in &eng.root_slots(blk) {
                rep.record("torsion_a_same_factor", vmax(&eng.torsion(&ea, &eng.unit(sb))));
            }
            for &sg in &eng.root_slots(1 - blk) {
                rep.record("torsion_a_other_factor", vmax(&eng.torsion(&ea, &eng.unit(sg))));
            }
            let hw = eng.h(&w, &eng.coroot_m(sa));
            let expect = ea.map(|z| -z * hw / hi);
            rep.record("torsion_b_w_E_alpha", vmax(&(eng.torsion(&w, &ea) - expect)));
        }
    }
    rep.record("torsion_c_fibre", vmax(&eng.torsion(&w, &w)));

    // Curvature.
    for blk in 0..2 {
        let hi = eng.h_base[blk];
        let r = &ce.blocks[blk];
        for &sa in &eng.root_slots(blk) {
            let (ea, _, ea_bar) = eng.root(sa);
            let (_, ia) = eng.slot_index(sa);
            let curv = eng.curvature(&ea, &ea_bar);
            let lam_a = eng.lam(&ea);
            let lam_abar = eng.lam(&ea_bar);
            for &sb in &eng.root_slots(blk) {
                let (eb, _, _) = eng.root(sb);
                let (_, ib) = eng.slot_index(sb);
                let beta_h = r.root_value(r.roots_plus_n[ib], &r.h_co[ia]);
                let expect = &lam_a * (&lam_abar * &eb) + eb.map(|z| z * beta_h);
                rep.record("curvature_a_same_factor", vmax(&(&curv * &eb - expect)));
            }
            for &sg in &eng.root_slots(1 - blk) {
                rep.record("curvature_b_other_factor", vmax(&(&curv * eng.unit(sg))));
            }
            let h01 = eng.part01(&eng.coroot_m(sa));
            let hw = eng.h(&w, &eng.coroot_m(sa));
            let expect = eng.conj(&h01).map(|z| z * hw / hi);
            rep.record("curvature_c_fibre", vmax(&(&curv * &w - expect)));
        }
    }
    for v1 in &fiber_c {
        for v2 in &fiber_c {
            rep.record("curvature_d_fibre_fibre", linalg::max_abs(&eng.curvature(v1, v2)));
        }
    }

    // Ricci-type traces over a unitary frame of m^{10}.
    let frame = eng.unitary_frame();
    let curvs: Vec<CMatrix> = frame.iter().map(|u| eng.curvature(u, &eng.conj(u))).collect();
    let s_form = |x: &CVector, y: &CVector| -> Complex64 {
        let ybar = eng.conj(y);
        curvs.iter().map(|r| eng.h(&(r * x), &ybar)).sum()
    };
    let torsions: Vec<CVector> =
        frame.iter().flat_map(|u| frame.iter().map(move |v| (u, v))).map(|(u, v)| eng.torsion(u, v)).collect();
    let q_form = |x: &CVector, y: &CVector| -> Complex64 {
        let (xbar, ybar) = (eng.conj(x), eng.conj(y));
        torsions.iter().map(|t| eng.h(t, &ybar) * eng.h(t, &xbar).conj()).sum::<Complex64>() * (-0.5)
    };
    let k_form = |x: &CVector, y: &CVector| q_form(x, y) - s_form(x, y);

    // Unitary frame of f^{10} alone.
    let hff = metric.h_fiber()[(0, 0)].re;
    let e_fib = w.map(|z| z / hff.sqrt());

    for blk in 0..2 {
        let hi = eng.h_base[blk];
        for &sb in &eng.root_slots(blk) {
            let (eb, _, _) = eng.root(sb);
            let h01 = eng.part01(&eng.coroot_m(sb));
            let norm01 = eng.h(&eng.conj(&h01), &h01);
            rep.record("ricci_S_root", (s_form(&eb, &eb) - (-norm01 / hi + 0.5)).norm());
            let q = q_form(&eb, &eb);
            rep.record("quadratic_Q_root", (q + norm01 / hi).norm());
            let via_frame = eng.h(&e_fib, &eng.coroot_m(sb)).norm_sqr();
            rep.record("quadratic_Q_root_frame_sum", (q + via_frame / hi).norm());
            rep.record("K_root_is_minus_half", (k_form(&eb, &eb) + 0.5).norm());
            for &sc in &eng.root_slots(blk) {
                if sc != sb {
                    rep.record("K_root_offdiagonal", k_form(&eb, &eng.unit(sc)).norm());
                }
            }
            rep.record("quadratic_Q_fibre_root", q_form(&w, &eb).norm().max(q_form(&eb, &w).norm()));
            rep.record("K_fibre_root", k_form(&w, &eb).norm().max(k_form(&eb, &w).norm()));
        }
        for &sb in &eng.root_slots(1 - blk) {
            for &sa in &eng.root_slots(blk) {
                rep.record("K_root_offdiagonal", k_form(&eng.unit(sa), &eng.unit(sb)).norm());
            }
        }
    }

    // Fibre block: Σ_j Σ_α h_j^{-2} h(V, H_α) conj(h(V, H_α)).
    let mut fibre_sum = Complex64::new(0.0, 0.0);
    for blk in 0..2 {
        let hj = eng.h_base[blk];
        for &sa in &all_roots {
            if eng.slot_index(sa).0 == blk {
                let hv = eng.h(&w, &eng.coroot_m(sa));
                fibre_sum += hv * hv.conj() / (hj * hj);
            }
        }
    }
    rep.record("ricci_S_fibre", (s_form(&w, &w) - fibre_sum).norm());
    rep.record("quadratic_Q_fibre", q_form(&w, &w).norm());
    let k_ff = k_form(&w, &w);
    rep.record("K_fibre", (k_ff + fibre_sum).norm());

    let model = ce.model([metric.h_base()[0], metric.h_base()[1]])?;
    let kt = k_tensor(&model, metric)?;
    rep.record("K_fibre_matches_flow_tensor", (k_ff - kt.fiber[(0, 0)]).norm());
    Ok(rep)
}

/// Basis of `l^c = s_1^c ⊕ s_2^c`: compact root vectors and the part of the
/// Cartan subalgebra κ-orthogonal to the centre.
fn l_basis(eng: &Engine<'_>) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for (blk, r) in eng.ce.blocks.iter().enumerate() {
        for (i, j) in r.all_roots() {
            if !r.is_noncompact(i, j) {
                out.push(eng.embed(blk, &r.root_vector(i, j)));
            }
        }
        let zz = r.kappa(&r.z, &r.z);
        for h in r.cartan_basis() {
            let coef = r.kappa(&h, &r.z) / zz;
            let s = &h - &r.z * coef;
            out.push(eng.embed(blk, &s));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric(h1: f64, h2: f64, hf: f64) -> InvariantMetric {
        InvariantMetric::new(vec![h1, h2], CMatrix::from_element(1, 1, real(hf))).unwrap()
    }

    #[test]
    fn ce25_unit_metric() {
        let rep = verify_chern_tensors(&CERealization::ce25(), &metric(1.0, 1.0, 1.0)).unwrap();
        assert!(rep.all_below(1e-12), "{:?}", rep.failures(1e-12));
    }

    #[test]
    fn ce25_skewed_metric() {
        let rep = verify_chern_tensors(&CERealization::ce25(), &metric(3.0, 0.5, 2.0)).unwrap();
        assert!(rep.all_below(1e-12), "{:?}", rep.failures(1e-12));
    }

    #[test]
    fn realization_from_model_reproduces_coefficients() {
        let ce = CERealization::from_model(&crate::model::ce25(1.0, 1.0)).unwrap();
        assert_eq!(ce.complex_structure, CERealization::ce25().complex_structure);

        let fiber = crate::model::FiberSpec::from_pairs(1, &[vec![[0.3, -0.2]], vec![[-0.1, 0.4]]]);
        let factors = vec![FactorSpec::grassmannian(1, 2, 1.0), FactorSpec::grassmannian(2, 2, 1.5)];
        let m = build_cspace(factors, fiber).unwrap();
        let ce = CERealization::from_model(&m).unwrap();
        let got = ce.fiber_spec().unwrap();
        for (a, b) in got.c.iter().zip(&m.fiber().c) {
            assert!((a[0] - b[0]).norm() < 1e-14);
        }
        let rep = verify_chern_tensors(&ce, &metric(0.7, 1.3, 0.9)).unwrap();
        assert!(rep.all_below(1e-12), "{:?}", rep.failures(1e-12));
    }

    #[test]
    fn wrong_fibre_dimension() {
        let m = InvariantMetric::new(vec![1.0, 1.0], CMatrix::identity(2, 2)).unwrap();
        assert!(matches!(verify_chern_tensors(&CERealization::ce25(), &m), Err(Error::ShapeMismatch(_))));
    }
}
