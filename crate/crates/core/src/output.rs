//! Telemetry and report writers. The telemetry CSV carries one row per
//! simulation step (plus the closing snapshot) with a fixed, versioned column
//! set; floats print with Rust's shortest-round-trip formatting so identical
//! runs produce identical bytes. Summaries are plain key/value text.

use crate::harness::{ControllerComparison, PhaseResult, RunOutcome, TelemetryRow};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub const TELEMETRY_SCHEMA: &str = "rvsim-telemetry-v1";

pub const TELEMETRY_COLUMNS: &str = "t,x,y,z,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,mass,\
sigma_x,sigma_y,sigma_z,fthr_x,fthr_y,fthr_z,thrusters,phase,min_obstacle_dist,cone_margin";

fn telemetry_header(out: &mut String) {
    let _ = writeln!(out, "# schema: {TELEMETRY_SCHEMA}");
    let _ = writeln!(out, "{TELEMETRY_COLUMNS}");
}

fn telemetry_line(out: &mut String, r: &TelemetryRow) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.t,
        r.position.x,
        r.position.y,
        r.position.z,
        r.velocity.x,
        r.velocity.y,
        r.velocity.z,
        r.attitude.w,
        r.attitude.x,
        r.attitude.y,
        r.attitude.z,
        r.angular_rate.x,
        r.angular_rate.y,
        r.angular_rate.z,
        r.mass,
        r.sigma.x,
        r.sigma.y,
        r.sigma.z,
        r.thrust_body.x,
        r.thrust_body.y,
        r.thrust_body.z,
        r.thruster_word,
        r.phase,
        r.min_obstacle_dist,
        r.cone_margin
    );
}

/// Render the full telemetry file contents.
pub fn render_telemetry(rows: &[TelemetryRow]) -> String {
    // ~190 bytes per row keeps reallocation negligible.
    let mut out = String::with_capacity(64 + 190 * rows.len());
    telemetry_header(&mut out);
    for row in rows {
        telemetry_line(&mut out, row);
    }
    out
}

/// SHA-256 of the rendered telemetry bytes, hex encoded.
pub fn telemetry_digest(rows: &[TelemetryRow]) -> String {
    let mut hasher = Sha256::new();
    let mut buf = String::with_capacity(256);
    telemetry_header(&mut buf);
    hasher.update(buf.as_bytes());
    for row in rows {
        buf.clear();
        telemetry_line(&mut buf, row);
        hasher.update(buf.as_bytes());
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

pub fn write_telemetry(path: impl AsRef<Path>, rows: &[TelemetryRow]) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    let mut buf = String::with_capacity(256);
    telemetry_header(&mut buf);
    writer.write_all(buf.as_bytes())?;
    for row in rows {
        buf.clear();
        telemetry_line(&mut buf, row);
        writer.write_all(buf.as_bytes())?;
    }
    writer.flush()
}

fn phase_block(out: &mut String, index: usize, p: &PhaseResult) {
    let _ = writeln!(out, "phase {}: {}", index + 1, p.name);
    let _ = writeln!(out, "  completed: {}", p.completed);
    let _ = writeln!(out, "  elapsed_s: {}", p.elapsed);
    let _ = writeln!(out, "  fuel_kg: {}", p.fuel_consumed);
    let _ = writeln!(out, "  control_effort_Ns: {}", p.control_effort);
    let _ = writeln!(
        out,
        "  final_error_m: [{}, {}, {}]",
        p.final_position_error.x, p.final_position_error.y, p.final_position_error.z
    );
    let _ = writeln!(out, "  min_clearance_m: {}", p.min_clearance);
    let _ = writeln!(out, "  cone_breach: {}", p.flags.cone_breach);
    let _ = writeln!(out, "  collision: {}", p.flags.collision);
    let _ = writeln!(out, "  propellant_out: {}", p.flags.propellant_out);
    let _ = writeln!(out, "  timed_out: {}", p.flags.timed_out);
    let _ = writeln!(out, "  guidance_updates: {}", p.guidance_updates);
    let _ = writeln!(out, "  control_updates: {}", p.control_updates);
    let _ = writeln!(out, "  sensor_updates: {}", p.sensor_updates);
}

fn outcome_block(out: &mut String, outcome: &RunOutcome, seed: u64, digest: &str) {
    let _ = writeln!(out, "controller: {}", outcome.controller.label());
    let _ = writeln!(out, "seed: {seed}");
    let _ = writeln!(out, "telemetry_sha256: {digest}");
    let _ = writeln!(out, "phases_run: {}", outcome.phases.len());
    for (i, p) in outcome.phases.iter().enumerate() {
        phase_block(out, i, p);
    }
    let _ = writeln!(out, "totals:");
    let _ = writeln!(out, "  elapsed_s: {}", outcome.total_elapsed());
    let _ = writeln!(out, "  fuel_kg: {}", outcome.total_fuel());
    let _ = writeln!(out, "  control_effort_Ns: {}", outcome.total_control_effort());
    let _ = writeln!(
        out,
        "  final_position_m: [{}, {}, {}]",
        outcome.final_state.position.x,
        outcome.final_state.position.y,
        outcome.final_state.position.z
    );
}

/// Render the single-run summary report.
pub fn render_summary(outcome: &RunOutcome, seed: u64) -> String {
    let digest = telemetry_digest(&outcome.telemetry);
    let mut out = String::new();
    outcome_block(&mut out, outcome, seed, &digest);
    out
}

/// Render the joined two-controller comparison report.
pub fn render_comparison(cmp: &ControllerComparison, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "controller comparison (identical scenario and seed)");
    let _ = writeln!(out, "===================================================");
    outcome_block(
        &mut out,
        &cmp.simplex,
        seed,
        &telemetry_digest(&cmp.simplex.telemetry),
    );
    let _ = writeln!(out);
    outcome_block(
        &mut out,
        &cmp.componentwise,
        seed,
        &telemetry_digest(&cmp.componentwise.telemetry),
    );
    let _ = writeln!(out);
    let ce_s = cmp.simplex.total_control_effort();
    let ce_c = cmp.componentwise.total_control_effort();
    let _ = writeln!(out, "deltas:");
    let _ = writeln!(out, "  control_effort_ratio_simplex_over_componentwise: {}", ce_s / ce_c);
    let _ = writeln!(
        out,
        "  fuel_delta_kg: {}",
        cmp.simplex.total_fuel() - cmp.componentwise.total_fuel()
    );
    let _ = writeln!(
        out,
        "  elapsed_delta_s: {}",
        cmp.simplex.total_elapsed() - cmp.componentwise.total_elapsed()
    );
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> std::io::Result<()> {
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{Quaternion, Vec3};
    use crate::harness::{ControllerKind, ViolationFlags};
    use crate::dynamics::SpacecraftState;

    fn row(t: f64) -> TelemetryRow {
        TelemetryRow {
            t,
            position: Vec3::new(-3000.0 + t, 0.5, -0.25),
            velocity: Vec3::new(1.0, 0.0, 0.0),
            attitude: Quaternion::IDENTITY,
            angular_rate: Vec3::zeros(),
            mass: 600.0 - 1e-3 * t,
            sigma: Vec3::new(1e-4, -2e-4, 0.0),
            thrust_body: Vec3::new(2.0, -2.0, 0.0),
            thruster_word: 0b1100,
            phase: 0,
            min_obstacle_dist: f64::INFINITY,
            cone_margin: f64::INFINITY,
        }
    }

    fn outcome(rows: Vec<TelemetryRow>) -> RunOutcome {
        RunOutcome {
            controller: ControllerKind::Simplex,
            phases: vec![PhaseResult {
                name: "leg".into(),
                completed: true,
                fuel_consumed: 0.0,
                elapsed: rows.len() as f64,
                control_effort: 0.0,
                final_position_error: Vec3::zeros(),
                min_clearance: f64::INFINITY,
                flags: ViolationFlags::default(),
                guidance_updates: 1,
                control_updates: 1,
                sensor_updates: 1,
            }],
            telemetry: rows,
            final_state: SpacecraftState::at_rest(Vec3::zeros(), 600.0),
        }
    }

    #[test]
    fn empty_run_renders_header_only() {
        let text = render_telemetry(&[]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# schema: "));
        assert_eq!(lines[1], TELEMETRY_COLUMNS);
        assert_eq!(lines[1].split(',').count(), 25);
    }

    #[test]
    fn rows_have_the_fixed_column_count() {
        let text = render_telemetry(&[row(0.0), row(0.01)]);
        for line in text.lines().skip(1) {
            assert_eq!(line.split(',').count(), 25, "{line}");
        }
        assert!(text.contains("inf"));
    }

    #[test]
    fn digest_matches_rendered_bytes_and_is_stable() {
        let rows = vec![row(0.0), row(0.01), row(0.02)];
        let digest = telemetry_digest(&rows);
        let mut hasher = Sha256::new();
        hasher.update(render_telemetry(&rows).as_bytes());
        let expect = hasher.finalize();
        let expect_hex: String = expect.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(digest, expect_hex);
        assert_eq!(digest, telemetry_digest(&rows));
    }

    #[test]
    fn identical_runs_write_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let rows = vec![row(0.0), row(0.01)];
        write_telemetry(&a, &rows).unwrap();
        write_telemetry(&b, &rows).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        // File bytes equal the rendered string.
        assert_eq!(
            std::fs::read_to_string(&a).unwrap(),
            render_telemetry(&rows)
        );
    }

    #[test]
    fn summary_reports_zeroes_for_an_empty_run() {
        let text = render_summary(&outcome(vec![]), 7);
        assert!(text.contains("controller: simplex"));
        assert!(text.contains("seed: 7"));
        assert!(text.contains("fuel_kg: 0"));
        assert!(text.contains("control_effort_Ns: 0"));
        assert!(text.contains("telemetry_sha256: "));
    }

    #[test]
    fn comparison_report_includes_both_cases_and_the_ratio() {
        let cmp = ControllerComparison {
            simplex: outcome(vec![row(0.0)]),
            componentwise: RunOutcome {
                controller: ControllerKind::Componentwise,
                ..outcome(vec![row(0.0)])
            },
        };
        let text = render_comparison(&cmp, 3);
        assert!(text.contains("controller: simplex"));
        assert!(text.contains("controller: componentwise"));
        assert!(text.contains("control_effort_ratio_simplex_over_componentwise"));
    }
}
