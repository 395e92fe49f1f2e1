//! The cavity checks: invariants of the Yee scheme in a perfectly
//! conducting box, convergence to standing modes, and the field momentum and
//! angular momentum identities on manufactured solutions.

use serde::{Deserialize, Serialize};

use crate::maxwell::{
    angular_momentum_rate_check, mode_error, momentum_identity_residual, sample_patch, Axis, BoxGeometry, CavityMode,
    ChargeUpdate, EMFieldState, Manufactured, MaxwellDiagnostics, PatchGrid, StaggeredVector,
};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    /// Cells per axis of the unit cube for the long runs.
    pub cells: usize,
    /// Source-free steps for the energy drift.
    pub steps: usize,
    /// Steps with a driving current for the Gauss checks.
    pub source_steps: usize,
    pub cfl: f64,
    /// Lattices for the momentum identity residual, coarse to fine.
    pub mms_cells: Vec<usize>,
    /// Patch resolutions for the angular momentum identity, coarse to fine.
    pub patch_cells: Vec<usize>,
    /// Resolutions for convergence to a standing mode, coarse to fine.
    pub mode_cells: Vec<usize>,
    pub mode_time: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            cells: 32,
            steps: 10_000,
            source_steps: 400,
            cfl: 0.5,
            mms_cells: vec![8, 16, 32],
            patch_cells: vec![12, 24, 48],
            mode_cells: vec![8, 16, 32],
            mode_time: 0.5,
        }
    }
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells < 4 || self.steps == 0 || self.source_steps == 0 {
            return Err(Error::config("cavity needs at least 4 cells and one step of each kind"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config(format!("cfl factor {} is not in (0, 1]", self.cfl)));
        }
        for (name, v) in [
            ("mms_cells", &self.mms_cells),
            ("patch_cells", &self.patch_cells),
            ("mode_cells", &self.mode_cells),
        ] {
            if v.len() < 2 || v.windows(2).any(|w| w[1] <= w[0]) || v[0] < 4 {
                return Err(Error::config(format!(
                    "{name} must list at least two increasing resolutions >= 4"
                )));
            }
        }
        if !(self.mode_time > 0.0) {
            return Err(Error::config("mode_time must be positive"));
        }
        Ok(())
    }
}

/// One resolution of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub cells: usize,
    pub value: f64,
}

/// `log2(v_coarse / v_fine) / log2(n_fine / n_coarse)` for the last pair.
pub fn observed_order(levels: &[Level]) -> f64 {
    let [a, b] = [levels[levels.len() - 2], levels[levels.len() - 1]];
    (a.value / b.value).ln() / (b.cells as f64 / a.cells as f64).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct CavityReport {
    pub cells: usize,
    pub steps: usize,
    /// Walls exactly zero after every step of every run.
    pub pec_every_step: bool,
    /// Largest `|div B|` seen after any step of any run.
    pub max_div_b: f64,
    /// `max_n |W_n - W_0| / W_0` for the conserved discrete energy `W`.
    pub energy_drift: f64,
    /// `max_n max_nodes |G_n - G_0|` for the Gauss defect `G = div E - 4 pi rho`
    /// with the charge following the continuity equation.
    pub gauss_drift: f64,
    /// The same with the charge frozen, which must drift.
    pub frozen_gauss_drift: f64,
    pub momentum_residuals: Vec<Level>,
    pub momentum_order: f64,
    pub angular_mismatch: Vec<Level>,
    pub mode_errors: Vec<Level>,
    pub mode_order: f64,
    /// Field diagnostics of the source-free run every `DIAGNOSTICS_STRIDE` steps.
    #[serde(skip)]
    pub series: Vec<MaxwellDiagnostics>,
}

/// Steps between recorded diagnostics of the source-free run.
pub const DIAGNOSTICS_STRIDE: usize = 50;

struct Watch {
    pec: bool,
    div_b: f64,
}

impl Watch {
    fn see(&mut self, s: &EMFieldState) {
        self.pec &= s.pec_holds();
        self.div_b = self.div_b.max(s.div_b_residual());
    }
}

fn unit_box(cells: usize, cfl: f64) -> Result<EMFieldState> {
    let g = BoxGeometry::cube(cells, 1.0);
    EMFieldState::new(g, g.stable_dt(cfl))
}

fn source_free_drift(cfg: &CavityConfig, watch: &mut Watch) -> Result<(f64, Vec<MaxwellDiagnostics>)> {
    let mut s = unit_box(cfg.cells, cfg.cfl)?;
    let g = *s.geometry();
    let modes = [
        CavityMode::new(&g, [1, 1, 0], Vec3::new(0.0, 0.0, 1.0))?,
        CavityMode::new(&g, [2, 1, 1], Vec3::new(0.3, -0.5, 0.2))?,
        CavityMode::new(&g, [1, 3, 2], Vec3::new(-0.4, 0.1, 0.6))?,
    ];
    s.set_fields_from_potential(
        |x| modes.iter().map(|m| m.e(x, 0.0)).sum(),
        |x| modes.iter().map(|m| m.vector_potential(x, 0.17)).sum(),
    );
    let mut series = vec![s.diagnostics()];
    let w0 = series[0].discrete_energy;
    let mut drift: f64 = 0.0;
    for n in 1..=cfg.steps {
        s.step(None);
        watch.see(&s);
        if n % DIAGNOSTICS_STRIDE == 0 || n == cfg.steps {
            let d = s.diagnostics();
            drift = drift.max((d.discrete_energy - w0).abs() / w0);
            series.push(d);
        }
    }
    Ok((drift, series))
}

fn sourced_gauss_drift(cfg: &CavityConfig, charge: ChargeUpdate, watch: &mut Watch) -> Result<f64> {
    let mut s = unit_box(cfg.cells, cfg.cfl)?;
    s.charge_update = charge;
    let g = *s.geometry();
    let m = Manufactured::compact(Vec3::new(0.5, 0.5, 0.5), 0.3);
    s.set_fields_from_potential(|x| m.e(x, 0.0), |x| m.vector_potential(x, 0.0));
    // Start from charge equal to the discrete divergence of the field.
    let div = s.divergence_e();
    for (r, d) in s.rho.as_mut_slice().iter_mut().zip(div.as_slice()) {
        *r = d / (4.0 * std::f64::consts::PI);
    }
    let g0 = s.gauss_defect();
    let dt = s.dt();
    let mut drift: f64 = 0.0;
    for n in 0..cfg.source_steps {
        let t = (n as f64 + 0.5) * dt;
        let j = StaggeredVector::sample_edge_components(&g, |a, x| m.j_component(a, x, t));
        s.step(Some(&j));
        watch.see(&s);
        let gn = s.gauss_defect();
        let d = gn
            .as_slice()
            .iter()
            .zip(g0.as_slice())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        drift = drift.max(d);
    }
    Ok(drift)
}

fn mode_convergence(cfg: &CavityConfig, watch: &mut Watch) -> Result<Vec<Level>> {
    cfg.mode_cells
        .iter()
        .map(|&n| {
            let g = BoxGeometry::cube(n, 1.0);
            let steps = (cfg.mode_time / g.stable_dt(cfg.cfl)).ceil() as usize;
            let mut s = EMFieldState::new(g, cfg.mode_time / steps as f64)?;
            let mode = CavityMode::new(&g, [1, 2, 1], Vec3::new(1.0, 0.2, -0.4))?;
            s.set_fields_from_potential(|x| mode.e(x, 0.0), |x| mode.vector_potential(x, 0.0));
            for _ in 0..steps {
                s.step(None);
                watch.see(&s);
            }
            Ok(Level {
                cells: n,
                value: mode_error(&s, &mode),
            })
        })
        .collect()
}

fn angular_study(cells: &[usize]) -> Vec<Level> {
    let m = Manufactured::compact(Vec3::new(0.5, 0.5, 0.5), 0.35);
    let axis = Axis {
        origin: Vec3::new(0.52, 0.47, 0.5),
        direction: Vec3::new(0.2, -0.3, 1.0).normalize(),
    };
    cells
        .iter()
        .map(|&n| {
            let grid = PatchGrid {
                lo: Vec3::zeros(),
                side: 1.0,
                n,
            };
            let ht = grid.spacing();
            let series: Vec<_> = (0..3)
                .map(|k| sample_patch(&m, &grid, 0.4 + (k as f64 - 1.0) * ht))
                .collect();
            Level {
                cells: n,
                value: angular_momentum_rate_check(&grid, &series, &axis).relative_mismatch(),
            }
        })
        .collect()
}

pub fn run_cavity(cfg: &CavityConfig) -> Result<CavityReport> {
    cfg.validate()?;
    let mut watch = Watch { pec: true, div_b: 0.0 };
    let (energy_drift, series) = source_free_drift(cfg, &mut watch)?;
    let gauss_drift = sourced_gauss_drift(cfg, ChargeUpdate::Continuity, &mut watch)?;
    let frozen_gauss_drift = sourced_gauss_drift(cfg, ChargeUpdate::Frozen, &mut watch)?;
    let momentum_residuals: Vec<Level> = cfg
        .mms_cells
        .iter()
        .map(|&n| Level {
            cells: n,
            value: momentum_identity_residual(&Manufactured::smooth(), Vec3::zeros(), Vec3::new(1.0, 1.2, 0.9), n, 0.3),
        })
        .collect();
    let mode_errors = mode_convergence(cfg, &mut watch)?;
    Ok(CavityReport {
        cells: cfg.cells,
        steps: cfg.steps,
        pec_every_step: watch.pec,
        max_div_b: watch.div_b,
        energy_drift,
        gauss_drift,
        frozen_gauss_drift,
        momentum_order: observed_order(&momentum_residuals),
        momentum_residuals,
        angular_mismatch: angular_study(&cfg.patch_cells),
        mode_order: observed_order(&mode_errors),
        mode_errors,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_behaves() {
        let cfg = CavityConfig {
            cells: 8,
            steps: 300,
            source_steps: 60,
            mms_cells: vec![6, 12],
            patch_cells: vec![8, 16],
            mode_cells: vec![6, 12],
            ..Default::default()
        };
        let r = run_cavity(&cfg).unwrap();
        assert!(r.pec_every_step);
        assert!(r.max_div_b < 1e-12, "{r:?}");
        assert!(r.energy_drift < 1e-12, "{r:?}");
        assert!(r.gauss_drift < 1e-12, "{r:?}");
        assert!(r.frozen_gauss_drift > 1e-6, "{r:?}");
        assert!(r.momentum_order > 1.5, "{r:?}");
        assert!(r.mode_order > 1.5, "{r:?}");
        assert!(r.angular_mismatch[1].value < r.angular_mismatch[0].value, "{r:?}");
    }

    #[test]
    fn order_of_exact_power_law() {
        let l = [Level { cells: 8, value: 1.0 }, Level { cells: 16, value: 0.25 }];
        assert!((observed_order(&l) - 2.0).abs() < 1e-14);
    }
}
