//! Constraint blocks shared by the extensive form, the recourse solver, and
//! the tests: the λ-branch indicator, the two criteria, the KKT embedding of
//! the classification program, and its dual-certificate counterpart.

use super::{NcBundle, NcMode, ScotsCase};
use crate::connectedness::{region_constraints, CompactForm};
use crate::contingency::ContingencyVector;
use crate::netgraph::Topology;
use crate::solver::{Expr, Model, VarId};

/// Angle box for the DC model; islands carry free-floating potentials, so the
/// box also anchors the flow-law big-M.
pub const THETA_MAX: f64 = 20.0;
/// Cap on the classification duals; audited after every solve.
pub const LAMBDA_CAP: f64 = 8.0;
/// Big-M for the λ side of the KKT complementarity pairs.
pub const M_XI: f64 = 16.0;

/// φ1 as forced by the indicator arithmetic when the contingency is data.
pub fn phi1_for(o: &ContingencyVector, lambda: usize) -> f64 {
    if o.is_lambda_branch(lambda) {
        1.0
    } else {
        0.0
    }
}

/// The λ-branch indicator constraints, stated verbatim over a binary φ1:
/// `1 - φ1(λ+1) ≤ (n_b - 1ᵀo_b) - λ ≤ (1 - φ1)(η - λ)`.
pub fn lambda_branch_indicator_block(
    model: &mut Model,
    o_b: &[Expr],
    lambda: usize,
    eta: usize,
    phi1: VarId,
    prefix: &str,
) {
    let n_b = o_b.len() as f64;
    let lam = lambda as f64;
    let eta = eta as f64;
    let sum_ob = Expr::sum(o_b.iter().cloned());
    // (n_b - Σo_b) - λ ≥ 1 - φ1(λ+1)
    model.ge(
        format!("{prefix}.lam_lo"),
        Expr::term(phi1, lam + 1.0).minus(&sum_ob),
        1.0 + lam - n_b,
    );
    // (n_b - Σo_b) - λ ≤ (1 - φ1)(η - λ)
    model.le(
        format!("{prefix}.lam_hi"),
        Expr::term(phi1, eta - lam).minus(&sum_ob),
        eta - n_b,
    );
}

/// Criterion 1: the classification objective stays within the inevitable
/// band whenever the contingency is a λ-branch one.
pub fn criterion1_block(
    model: &mut Model,
    objective_expr: &Expr,
    phi1: f64,
    n_u: usize,
    r: f64,
    big_m: f64,
    prefix: &str,
) {
    model.le(
        format!("{prefix}.crit1"),
        objective_expr.clone(),
        n_u as f64 * r + (1.0 - phi1) * big_m,
    );
}

/// Criterion 2 in the indicator form: φ2/φ3 band indicators with half-unit
/// threshold shifts (exact for integral classification objectives), then the
/// two conditional region memberships over the post-control topology and the
/// restored topology.
#[allow(clippy::too_many_arguments)]
pub fn criterion2_block(
    model: &mut Model,
    topology: &Topology,
    c: &[i64],
    lower_threshold: f64,
    upper_threshold: f64,
    objective_expr: &Expr,
    z_bar: &[Expr],
    restored: &[Expr],
    region_big_m: f64,
    prefix: &str,
) -> (VarId, VarId) {
    let phi2 = model.binary(format!("{prefix}.phi2"));
    let phi3 = model.binary(format!("{prefix}.phi3"));
    let norm1: f64 = c.iter().map(|v| v.abs() as f64).sum();
    let m = 2.0 * (norm1 + upper_threshold + lower_threshold + 1.0);

    // Mφ2 ≥ T_lo - 1/2 - obj ≥ M(φ2 - 1)
    model.ge(
        format!("{prefix}.phi2_force"),
        objective_expr.clone().add_term(phi2, m),
        lower_threshold - 0.5,
    );
    model.le(
        format!("{prefix}.phi2_clear"),
        objective_expr.clone().add_term(phi2, m),
        m + lower_threshold - 0.5,
    );
    // Mφ3 ≥ obj - T_hi - 1/2 ≥ M(φ3 - 1)
    model.ge(
        format!("{prefix}.phi3_force"),
        Expr::term(phi3, m).minus(objective_expr),
        -(upper_threshold + 0.5),
    );
    model.le(
        format!("{prefix}.phi3_clear"),
        Expr::term(phi3, m).minus(objective_expr),
        m - upper_threshold - 0.5,
    );

    // post-control topology must be connected when the post-contingency one
    // is: deactivation level obj / T_lo
    let phi_first = objective_expr.clone().scaled(1.0 / lower_threshold);
    region_constraints(
        model,
        topology,
        &format!("{prefix}.zbar"),
        z_bar,
        &phi_first,
        c,
        None,
        region_big_m,
    );
    // the restored topology must be connected when the disconnection was
    // inevitable: deactivation level φ2 + φ3
    let phi_second = Expr::term(phi2, 1.0).add_term(phi3, 1.0);
    region_constraints(
        model,
        topology,
        &format!("{prefix}.rest"),
        restored,
        &phi_second,
        c,
        None,
        region_big_m,
    );
    (phi2, phi3)
}

/// Variables of one KKT-embedded classification block.
pub struct KktVars {
    pub y: Vec<VarId>,
    pub lambda: Vec<VarId>,
    pub xi: Vec<VarId>,
    /// 1ᵀ(d₊ + d₋) over the y block.
    pub objective_expr: Expr,
}

/// Embeds the optimality system of the classification program for a status
/// vector that is affine in first-stage variables: primal rows, stationarity
/// `h + Aᵀλ = 0`, and big-M complementarity pairs over 4(n_n + n_b) rows.
pub fn kkt_block(
    model: &mut Model,
    form: &CompactForm,
    z_tilde: &[Expr],
    prefix: &str,
) -> KktVars {
    let n_y = form.num_y();
    let m_c = 2.0 * form.big_m + 1.0;
    let y: Vec<VarId> = (0..n_y)
        .map(|j| model.free_var(format!("{prefix}.y{j}")))
        .collect();
    let lambda: Vec<VarId> = (0..form.rows.len())
        .map(|i| model.var(format!("{prefix}.lam{i}"), 0.0, M_XI))
        .collect();
    let xi: Vec<VarId> = (0..form.rows.len())
        .map(|i| model.binary(format!("{prefix}.xi{i}")))
        .collect();

    let h = form.h();
    for (i, row) in form.rows.iter().enumerate() {
        let mut ay = Expr::default();
        for &(j, a) in &row.coeffs {
            ay = ay.add_term(y[j], a);
        }
        // Ay ≤ w(z̃), affine z̃ terms moved left
        let mut primal = ay.clone();
        if let Some((e, k)) = row.w_branch {
            primal = primal.minus(&z_tilde[e].clone().scaled(k));
        }
        model.le(format!("{prefix}.kkt_p{i}"), primal, row.w_const);
        // w - Ay ≤ M(1 - ξ)
        let mut slack_side = ay.scaled(-1.0).add_term(xi[i], m_c);
        if let Some((e, k)) = row.w_branch {
            slack_side = slack_side.plus(&z_tilde[e].clone().scaled(k));
        }
        model.le(format!("{prefix}.kkt_s{i}"), slack_side, m_c - row.w_const);
        // λ ≤ Mξ
        model.le(
            format!("{prefix}.kkt_l{i}"),
            Expr::term(lambda[i], 1.0).add_term(xi[i], -M_XI),
            0.0,
        );
    }
    // stationarity per y column
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_y];
    for (i, row) in form.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            columns[j].push((i, a));
        }
    }
    for j in 0..n_y {
        let mut st = Expr::default();
        for &(i, a) in &columns[j] {
            st = st.add_term(lambda[i], a);
        }
        model.eq(format!("{prefix}.kkt_st{j}"), st, -h[j]);
    }

    let mut objective_expr = Expr::default();
    for item in y.iter().take(2 * form.n) {
        objective_expr = objective_expr.add_term(*item, 1.0);
    }
    KktVars {
        y,
        lambda,
        xi,
        objective_expr,
    }
}

/// Post-solve audit of one KKT block: no dual may sit at its cap and no
/// complementarity slack may sit at its big-M.
pub fn audit_kkt_big_m(
    form: &CompactForm,
    z_tilde: &[f64],
    point: &[f64],
    vars: &KktVars,
) -> Result<(), String> {
    let m_c = 2.0 * form.big_m + 1.0;
    for (i, row) in form.rows.iter().enumerate() {
        let lam = point[vars.lambda[i].0];
        if lam > M_XI * (1.0 - 1e-4) {
            return Err(format!("dual {i} at cap {lam}"));
        }
        let xi = point[vars.xi[i].0];
        let w = row.w_const
            + row
                .w_branch
                .map_or(0.0, |(e, k)| k * z_tilde[e]);
        let ay: f64 = row
            .coeffs
            .iter()
            .map(|&(j, a)| a * point[vars.y[j].0])
            .sum();
        if xi < 0.5 && w - ay > m_c * (1.0 - 1e-4) {
            return Err(format!("complementarity slack {i} at big-M"));
        }
    }
    Ok(())
}

/// Variables of one dual-certificate block: a dual-feasible λ whose objective
/// certifies a lower bound on the classification optimum. Rows carrying the
/// big-M in w are gated to zero dual weight on the side where w is large, so
/// the dual objective reduces to the balance-row terms exactly.
pub struct DualCertVars {
    pub lambda: Vec<VarId>,
    pub value: Expr,
}

pub(crate) fn dual_certificate_block(
    model: &mut Model,
    form: &CompactForm,
    z_tilde: &[Expr],
    prefix: &str,
) -> DualCertVars {
    let lambda: Vec<VarId> = (0..form.rows.len())
        .map(|i| model.var(format!("{prefix}.dlam{i}"), 0.0, LAMBDA_CAP))
        .collect();
    let mut value = Expr::default();
    for (i, row) in form.rows.iter().enumerate() {
        match row.w_branch {
            Some((e, k)) if k < 0.0 => {
                // w = M(1 - z̃): allow weight only when the branch is on
                model.le(
                    format!("{prefix}.gate{i}"),
                    Expr::term(lambda[i], 1.0).minus(&z_tilde[e].clone().scaled(LAMBDA_CAP)),
                    0.0,
                );
            }
            Some((e, _)) => {
                // w = M z̃: allow weight only when the branch is off
                model.le(
                    format!("{prefix}.gate{i}"),
                    Expr::term(lambda[i], 1.0).plus(&z_tilde[e].clone().scaled(LAMBDA_CAP)),
                    LAMBDA_CAP,
                );
            }
            None => {
                if row.w_const != 0.0 {
                    value = value.add_term(lambda[i], -row.w_const);
                }
            }
        }
    }
    // stationarity h + Aᵀλ = 0
    let n_y = form.num_y();
    let h = form.h();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_y];
    for (i, row) in form.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            columns[j].push((i, a));
        }
    }
    for j in 0..n_y {
        let mut st = Expr::default();
        for &(i, a) in &columns[j] {
            st = st.add_term(lambda[i], a);
        }
        model.eq(format!("{prefix}.dst{j}"), st, -h[j]);
    }
    DualCertVars { lambda, value }
}

/// Auxiliary variables of one DC dispatch block.
pub struct DispatchVars {
    pub theta: Vec<VarId>,
    pub flow: Vec<VarId>,
}

/// DC network physics over affine branch statuses: capacity coupling,
/// big-M-relaxed flow law, and nodal balance against the given injections.
pub fn dispatch_block(
    model: &mut Model,
    case: &ScotsCase,
    statuses: &[Expr],
    injections: &[Expr],
    prefix: &str,
) -> DispatchVars {
    let topology = &case.topology;
    let n = topology.bus_count();
    let n_b = topology.branch_count();
    let theta: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("{prefix}.th{}", i + 1), -THETA_MAX, THETA_MAX))
        .collect();
    let flow: Vec<VarId> = (0..n_b)
        .map(|e| model.free_var(format!("{prefix}.f{}", e + 1)))
        .collect();

    for (e, &(a, b)) in topology.branches().iter().enumerate() {
        let cap = case.capacity[e];
        let susc = case.susceptance[e];
        // |f| ≤ cap·status
        model.le(
            format!("{prefix}.cap_hi{e}"),
            Expr::from(flow[e]).minus(&statuses[e].clone().scaled(cap)),
            0.0,
        );
        model.ge(
            format!("{prefix}.cap_lo{e}"),
            Expr::from(flow[e]).plus(&statuses[e].clone().scaled(cap)),
            0.0,
        );
        // |f - B(θ_a - θ_b)| ≤ M_f (1 - status)
        let m_f = susc * 2.0 * THETA_MAX + cap + 1.0;
        let law = Expr::from(flow[e])
            .add_term(theta[a - 1], -susc)
            .add_term(theta[b - 1], susc);
        model.le(
            format!("{prefix}.law_hi{e}"),
            law.clone().plus(&statuses[e].clone().scaled(m_f)),
            m_f,
        );
        model.ge(
            format!("{prefix}.law_lo{e}"),
            law.minus(&statuses[e].clone().scaled(m_f)),
            -m_f,
        );
    }
    let incidence = topology.incidence_matrix();
    for i in 0..n {
        let mut outflow = Expr::default();
        for e in 0..n_b {
            if incidence[i][e] != 0.0 {
                outflow = outflow.add_term(flow[e], incidence[i][e]);
            }
        }
        model.eq(
            format!("{prefix}.bal{}", i + 1),
            outflow.minus(&injections[i]),
            0.0,
        );
    }
    DispatchVars { theta, flow }
}

/// Which single-level form carries the classification optimum inside a
/// scenario block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcEncoding {
    /// The optimality-conditions embedding, one complementarity binary per
    /// region row.
    Kkt,
    /// Class-claim binaries backed by primal membership and gated dual
    /// certificates; equivalent at integral points and far fewer binaries.
    Certificates,
}

/// Variables of one scenario block needed for cost assembly and audits.
pub struct SecondStageVars {
    pub cost: Expr,
    pub z_plus: Vec<VarId>,
    pub z_minus: Vec<VarId>,
    pub shed: Vec<VarId>,
    pub reg_up: Vec<VarId>,
    pub reg_down: Vec<VarId>,
    pub z_bar: Vec<Expr>,
    pub kkt: Option<KktVars>,
}

/// Builds one scenario's corrective-control block: regulation, shedding,
/// corrective switching around the post-contingency statuses, DC physics on
/// the post-control topology, and (in full-criteria mode) the connectedness
/// blocks in the chosen encoding.
#[allow(clippy::too_many_arguments)]
pub fn build_second_stage(
    model: &mut Model,
    case: &ScotsCase,
    nc: &NcBundle,
    form: &CompactForm,
    scenario: &ContingencyVector,
    z: &[Expr],
    p_g: &[Expr],
    nc_mode: NcMode,
    encoding: NcEncoding,
    prefix: &str,
) -> SecondStageVars {
    let topology = &case.topology;
    let n = topology.bus_count();
    let n_b = topology.branch_count();
    let n_g = case.num_generators();

    let z_plus: Vec<VarId> = (0..n_b)
        .map(|e| model.binary(format!("{prefix}.zp{}", e + 1)))
        .collect();
    let z_minus: Vec<VarId> = (0..n_b)
        .map(|e| model.binary(format!("{prefix}.zm{}", e + 1)))
        .collect();
    let shed: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("{prefix}.shed{}", i + 1), 0.0, case.loads[i]))
        .collect();
    let mut reg_up = Vec::with_capacity(n_g);
    let mut reg_down = Vec::with_capacity(n_g);
    for (k, g) in case.generators.iter().enumerate() {
        let alive = scenario.o_g[k];
        let up = model.var(
            format!("{prefix}.rup{k}"),
            0.0,
            if alive { g.reg_up } else { 0.0 },
        );
        let dn = model.var(
            format!("{prefix}.rdn{k}"),
            0.0,
            if alive { g.reg_down } else { 0.0 },
        );
        reg_up.push(up);
        reg_down.push(dn);
    }

    // z̄ = z⊙o_b + z₊ - z₋ with switching restricted to sensible branches
    let mut z_bar: Vec<Expr> = Vec::with_capacity(n_b);
    for e in 0..n_b {
        let ob = if scenario.o_b[e] { 1.0 } else { 0.0 };
        let z_tilde_e = z[e].clone().scaled(ob);
        // switch on only in-service branches that are off
        model.le(
            format!("{prefix}.zp_dom{e}"),
            Expr::from(z_plus[e]).plus(&z_tilde_e.clone()),
            ob,
        );
        // switch off only in-service branches that are on
        model.le(
            format!("{prefix}.zm_dom{e}"),
            Expr::from(z_minus[e]).minus(&z_tilde_e.clone()),
            0.0,
        );
        z_bar.push(
            z_tilde_e
                .add_term(z_plus[e], 1.0)
                .add_term(z_minus[e], -1.0),
        );
    }
    let switch_count = Expr::sum(
        z_plus
            .iter()
            .chain(z_minus.iter())
            .map(|&v| Expr::from(v)),
    );
    model.le(
        format!("{prefix}.budget"),
        switch_count.clone(),
        case.switch_budget as f64,
    );

    // injections: surviving generation + shed - load
    let mut injections: Vec<Expr> = (0..n)
        .map(|i| Expr::term(shed[i], 1.0).plus(&Expr::constant(-case.loads[i])))
        .collect();
    for (k, g) in case.generators.iter().enumerate() {
        if scenario.o_g[k] {
            let output = p_g[k]
                .clone()
                .add_term(reg_up[k], 1.0)
                .add_term(reg_down[k], -1.0);
            // surviving units stay within their limits
            model.ge(format!("{prefix}.gmin{k}"), output.clone(), g.p_min);
            model.le(format!("{prefix}.gmax{k}"), output.clone(), g.p_max);
            injections[g.bus - 1] = injections[g.bus - 1].clone().plus(&output);
        }
    }
    dispatch_block(model, case, &z_bar, &injections, prefix);

    let mut cost = Expr::sum(
        case.generators
            .iter()
            .enumerate()
            .map(|(k, g)| {
                Expr::term(reg_up[k], g.cost).add_term(reg_down[k], g.cost)
            }),
    );
    cost = cost.plus(&Expr::sum(
        shed.iter().map(|&s| Expr::term(s, case.voll)),
    ));
    cost = cost.plus(&switch_count.scaled(case.switch_cost));

    let mut kkt = None;
    if nc_mode == NcMode::FullCriteria {
        let z_tilde: Vec<Expr> = (0..n_b)
            .map(|e| {
                z[e].clone()
                    .scaled(if scenario.o_b[e] { 1.0 } else { 0.0 })
            })
            .collect();
        let restored: Vec<Expr> = (0..n_b)
            .map(|e| {
                let add = if scenario.o_b[e] { 0.0 } else { 1.0 };
                z_bar[e].clone().plus(&Expr::constant(add))
            })
            .collect();
        let phi1 = phi1_for(scenario, case.lambda);
        let n_u = nc.n_u();
        let r = nc.balanced.r;
        let t_lo = nc.lower_threshold();
        let t_hi = nc.upper_threshold();
        let norm1: f64 = nc.balanced.c.iter().map(|v| v.abs() as f64).sum();

        match encoding {
            NcEncoding::Kkt => {
                let vars = kkt_block(model, form, &z_tilde, prefix);
                criterion1_block(
                    model,
                    &vars.objective_expr,
                    phi1,
                    n_u,
                    r,
                    2.0 * (norm1 + t_hi + 1.0),
                    prefix,
                );
                criterion2_block(
                    model,
                    topology,
                    &nc.balanced.c,
                    t_lo,
                    t_hi,
                    &vars.objective_expr,
                    &z_bar,
                    &restored,
                    form.big_m,
                    prefix,
                );
                kkt = Some(vars);
            }
            NcEncoding::Certificates => {
                build_certificate_criteria(
                    model, case, nc, form, &z_tilde, &z_bar, &restored, phi1, prefix,
                );
            }
        }
    }

    SecondStageVars {
        cost,
        z_plus,
        z_minus,
        shed,
        reg_up,
        reg_down,
        z_bar,
        kkt,
    }
}

/// The claim encoding of both criteria: exactly one of (connected,
/// inevitable, other) is claimed; each claim carries the certificate that
/// makes lying infeasible, and the criterion-2 memberships hang off the
/// claims. Equivalent to the indicator form at integral points.
#[allow(clippy::too_many_arguments)]
fn build_certificate_criteria(
    model: &mut Model,
    case: &ScotsCase,
    nc: &NcBundle,
    form: &CompactForm,
    z_tilde: &[Expr],
    z_bar: &[Expr],
    restored: &[Expr],
    phi1: f64,
    prefix: &str,
) {
    let topology = &case.topology;
    let n = topology.bus_count();
    let n_u = nc.n_u();
    let r = nc.balanced.r;
    let t_lo = nc.lower_threshold();
    let t_hi = nc.upper_threshold();
    let c = &nc.balanced.c;
    let norm1: f64 = c.iter().map(|v| v.abs() as f64).sum();

    let claim_conn = model.binary(format!("{prefix}.claim_conn"));
    let claim_w = model.binary(format!("{prefix}.claim_w"));
    let claim_other = model.binary(format!("{prefix}.claim_other"));
    model.eq(
        format!("{prefix}.one_claim"),
        Expr::from(claim_conn)
            .add_term(claim_w, 1.0)
            .add_term(claim_other, 1.0),
        1.0,
    );
    // criterion 1: a λ-branch contingency cannot land in the other band
    if phi1 > 0.5 {
        model.le(format!("{prefix}.crit1"), Expr::from(claim_other), 0.0);
    }

    // claiming connected requires membership of the post-contingency mask
    let one_minus_conn = Expr::constant(1.0).add_term(claim_conn, -1.0);
    region_constraints(
        model,
        topology,
        &format!("{prefix}.zt"),
        z_tilde,
        &one_minus_conn,
        c,
        None,
        form.big_m,
    );
    // claiming inevitable requires a slack vector within the band budget
    let d_plus: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("{prefix}.dp{i}"), 0.0, f64::INFINITY))
        .collect();
    let d_minus: Vec<VarId> = (0..n)
        .map(|i| model.var(format!("{prefix}.dm{i}"), 0.0, f64::INFINITY))
        .collect();
    let d: Vec<Expr> = (0..n)
        .map(|i| Expr::from(d_plus[i]).add_term(d_minus[i], -1.0))
        .collect();
    let one_minus_w = Expr::constant(1.0).add_term(claim_w, -1.0);
    region_constraints(
        model,
        topology,
        &format!("{prefix}.wcert"),
        z_tilde,
        &one_minus_w,
        c,
        Some(&d),
        form.big_m,
    );
    let d_total = Expr::sum(
        d_plus
            .iter()
            .chain(d_minus.iter())
            .map(|&v| Expr::from(v)),
    );
    let m_budget = 2.0 * (norm1 + t_hi + 1.0);
    model.le(
        format!("{prefix}.wbudget"),
        d_total.plus(&Expr::term(claim_w, m_budget)),
        n_u as f64 * r + m_budget,
    );
    // claiming either disconnection band requires a dual lower bound
    let cert = dual_certificate_block(model, form, z_tilde, prefix);
    let m_void = 2.0 * (norm1 * LAMBDA_CAP + t_hi + 1.0);
    let target = Expr::term(claim_w, t_lo - 0.5)
        .add_term(claim_other, t_hi + 0.5)
        .plus(&Expr::constant(-m_void))
        .add_term(claim_w, m_void)
        .add_term(claim_other, m_void);
    model.ge(
        format!("{prefix}.dual_target"),
        cert.value.minus(&target),
        0.0,
    );

    // criterion 2: what the claims oblige corrective switching to preserve
    region_constraints(
        model,
        topology,
        &format!("{prefix}.zbar"),
        z_bar,
        &Expr::constant(1.0).add_term(claim_conn, -1.0),
        c,
        None,
        form.big_m,
    );
    region_constraints(
        model,
        topology,
        &format!("{prefix}.rest"),
        restored,
        &Expr::constant(1.0).add_term(claim_w, -1.0),
        c,
        None,
        form.big_m,
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{self, MilpOptions, Status};

    // Feasibility of the indicator block per status vector: φ1 = 1 exactly
    // on λ-branch vectors within the budget, neither value feasible beyond.
    #[test]
    fn indicator_truth_table() {
        let (n_b, lambda, eta) = (4usize, 1usize, 2usize);
        for bits in 0u32..16 {
            let o_b: Vec<bool> = (0..n_b).map(|e| bits >> e & 1 == 1).collect();
            let failures = o_b.iter().filter(|&&x| !x).count();
            for phi_val in [0.0, 1.0] {
                let mut m = Model::new();
                let phi1 = m.binary("phi1");
                let o_exprs: Vec<Expr> = o_b
                    .iter()
                    .map(|&on| Expr::constant(if on { 1.0 } else { 0.0 }))
                    .collect();
                lambda_branch_indicator_block(&mut m, &o_exprs, lambda, eta, phi1, "t");
                m.eq("fix", Expr::from(phi1), phi_val);
                let sol = solver::solve_milp(&m.to_problem(), &MilpOptions::default()).unwrap();
                let feasible = sol.status == Status::Optimal;
                let expected = if failures <= lambda {
                    phi_val == 1.0
                } else if failures <= eta {
                    phi_val == 0.0
                } else {
                    false
                };
                assert_eq!(
                    feasible, expected,
                    "o_b={o_b:?} failures={failures} phi1={phi_val}"
                );
            }
        }
    }
}
