use std::fs;

use super::*;

fn small_2d(method: Method, n: usize, hi: f64) -> ScanConfig {
    ScanConfig::new(Family::Golden2d, method, Axis::new(0.0, hi, n).unwrap(), Axis::new(0.0, hi, n).unwrap())
}

fn key(cells: &[ScanCell]) -> Vec<(Status, usize)> {
    cells.iter().map(|c| (c.status, c.iterations)).collect()
}

#[test]
fn names_roundtrip() {
    for f in [Family::Golden2d, Family::Spiral3d] {
        assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{f}\""));
    }
    for m in [Method::RenormTime1, Method::RenormAdaptive, Method::Conjugation] {
        assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
    }
    assert!("golden".parse::<Family>().is_err());
    assert!("renorm".parse::<Method>().is_err());
}

#[test]
fn families_are_consistent() {
    for f in [Family::Golden2d, Family::Spiral3d] {
        assert_eq!(f.frequency().dim(), f.dim());
        assert_eq!(f.big_omega().len(), f.dim());
        assert!(f.modes([0.1, 0.2, 0.3]).iter().all(|(nu, _)| nu.len() == f.dim()));
    }
    assert_eq!(Family::Golden2d.modes([0.1, 0.2, 0.3]).len(), 2);
}

#[test]
fn axes_validate_and_sample() {
    assert_eq!(Axis::new(0.0, 1.0, 3).unwrap().values(), vec![0.0, 0.5, 1.0]);
    assert_eq!(Axis::point(0.2).values(), vec![0.2]);
    assert!(Axis::new(1.0, 0.0, 3).is_err());
    assert!(Axis::new(0.0, 1.0, 0).is_err());
    assert!(Axis::new(0.0, 1.0, 1).is_err());
    assert!(Axis::new(0.5, 0.5, 4).is_err());
    assert!(Axis::new(0.0, f64::NAN, 2).is_err());
}

#[test]
fn cells_are_row_major_over_mu2_then_mu1() {
    let cfg = ScanConfig::new(Family::Spiral3d, Method::RenormTime1, Axis::new(0.0, 1.0, 2).unwrap(), Axis::new(2.0, 4.0, 3).unwrap());
    let c = cfg.cells();
    assert_eq!(c.len(), 6);
    assert_eq!(c[0], [0.0, 2.0, 0.1]);
    assert_eq!(c[1], [1.0, 2.0, 0.1]);
    assert_eq!(c[2], [0.0, 3.0, 0.1]);
    assert_eq!(c[5], [1.0, 4.0, 0.1]);
    let mut bad = small_2d(Method::RenormTime1, 2, 0.01);
    bad.mu3 = 0.1;
    assert!(bad.validate().is_err());
}

#[test]
fn origin_converges_immediately() {
    let cfg = ScanConfig::new(Family::Golden2d, Method::RenormTime1, Axis::point(0.0), Axis::point(0.0));
    for method in [Method::RenormTime1, Method::RenormAdaptive, Method::Conjugation] {
        let cells = run_grid(&ScanConfig { method, ..cfg.clone() }, 1).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].status, Status::Converged, "{method}");
        assert!(cells[0].iterations <= 1, "{method}: {}", cells[0].iterations);
    }
}

#[test]
fn axes_are_converged() {
    // mu1 = 0 and mu2 = 0 leave a single resonance: integrable. Beyond
    // mu2 ~ 0.08 on the mu2 axis the Lie transforms themselves diverge.
    let cells = run_grid(&small_2d(Method::RenormAdaptive, 5, 0.08), 0).unwrap();
    for c in &cells {
        if c.mu[0] == 0.0 || c.mu[1] == 0.0 {
            assert_eq!(c.status, Status::Converged, "{:?}", c.mu);
        }
    }
    assert_eq!(cells.last().unwrap().status, Status::Diverged);
}

#[test]
fn scans_are_deterministic() {
    let cfg = small_2d(Method::RenormTime1, 4, 0.045);
    let a = run_grid(&cfg, 1).unwrap();
    let b = run_grid(&cfg, 2).unwrap();
    assert_eq!(key(&a), key(&b));
    assert_eq!(a.iter().map(|c| c.mu).collect::<Vec<_>>(), cfg.cells());
    let statuses: std::collections::HashSet<_> = a.iter().map(|c| c.status).collect();
    assert!(statuses.contains(&Status::Converged) && statuses.contains(&Status::Diverged));
}

#[test]
fn interrupted_scan_resumes_to_the_same_result() {
    let cfg = small_2d(Method::RenormTime1, 4, 0.045);
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    let reference = run_grid_to(&cfg, 1, &full).unwrap();
    let text = fs::read_to_string(&full).unwrap();
    assert_eq!(text.lines().next(), Some("mu1,mu2,mu3,method,status,iterations,wall_time_s"));
    assert_eq!(text.lines().count(), 17);
    let sidecar: ScanConfig = serde_json::from_str(&fs::read_to_string(sidecar_path(&full)).unwrap()).unwrap();
    assert_eq!(sidecar, cfg);

    // keep the header, 6 rows and half of the seventh
    let lines: Vec<&str> = text.lines().collect();
    let partial = dir.path().join("partial.csv");
    let seventh = lines[7];
    let cut = format!("{}\n{}", lines[..7].join("\n"), &seventh[..seventh.len() / 2]);
    fs::write(&partial, cut).unwrap();
    fs::copy(sidecar_path(&full), sidecar_path(&partial)).unwrap();
    let resumed = run_grid_to(&cfg, 2, &partial).unwrap();
    assert_eq!(key(&resumed), key(&reference));
    let rows = read_cells(&partial).unwrap();
    assert_eq!(rows.len(), 16);
    let before = read_cells(&full).unwrap();
    // the first six rows were kept, not recomputed
    assert_eq!(rows[..6], before[..6]);
    assert_eq!(
        rows.iter().map(|r| (r.status, r.iterations)).collect::<Vec<_>>(),
        before.iter().map(|r| (r.status, r.iterations)).collect::<Vec<_>>()
    );

    // resuming a complete scan computes nothing
    let again = run_grid_to(&cfg, 1, &partial).unwrap();
    assert_eq!(read_cells(&partial).unwrap(), rows);
    assert_eq!(key(&again), key(&reference));
}

#[test]
fn resume_rejects_a_different_configuration() {
    let cfg = small_2d(Method::RenormTime1, 2, 0.01);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    run_grid_to(&cfg, 1, &path).unwrap();
    let other = small_2d(Method::RenormTime1, 2, 0.02);
    assert!(matches!(run_grid_to(&other, 1, &path), Err(Error::Config(_))));
}

#[test]
fn errors_are_recorded_not_fatal() {
    let mut cfg = ScanConfig::new(Family::Golden2d, Method::RenormTime1, Axis::new(0.0, 0.01, 2).unwrap(), Axis::point(0.0));
    cfg.settings.renorm.div_threshold = 0.0;
    let cells = run_grid(&cfg, 1).unwrap();
    assert!(cells.iter().all(|c| c.status == Status::Error && c.message.is_some()));
}

#[test]
fn ray_points() {
    assert_eq!(Ray::diagonal().at(0.02), [0.02, 0.02, 0.0]);
    let p = Ray::spiral_fifth().at(0.04);
    assert!((p[0] - 0.04).abs() < 1e-15 && (p[1] - 0.2).abs() < 1e-15 && p[2] == 0.1);
}

#[test]
fn bisection_brackets_the_two_d_threshold() {
    let s = MethodSettings::default();
    let b = bisect_threshold(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal(), (0.02, 0.035), 5e-4).unwrap();
    assert!(b.eps_hi - b.eps_lo < 5e-4);
    assert!(b.eps_lo <= 0.027590 + 5e-4 && 0.027590 - 5e-4 <= b.eps_hi, "{b:?}");
    assert_eq!(evaluate(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal().at(b.eps_lo)).status, Status::Converged);
    assert_eq!(evaluate(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal().at(b.eps_hi)).status, Status::Diverged);
    assert_eq!(b.coercions, 0);
    assert!(b.evaluations >= 2 + 5);
}

#[test]
fn bisection_checks_its_bracket() {
    let s = MethodSettings::default();
    let all_conv = bisect_threshold(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal(), (0.001, 0.002), 1e-4);
    assert!(matches!(all_conv, Err(Error::Bracket(_))));
    let all_div = bisect_threshold(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal(), (0.05, 0.06), 1e-4);
    assert!(matches!(all_div, Err(Error::Bracket(_))));
    assert!(bisect_threshold(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal(), (0.03, 0.02), 1e-4).is_err());
}

#[test]
fn indeterminate_counts_as_diverged() {
    let mut s = MethodSettings::default();
    s.renorm.max_iter = 3;
    // converges at once at zero; everything else runs out of iterations
    let b = bisect_threshold(Family::Golden2d, Method::RenormTime1, &s, Ray::diagonal(), (0.0, 0.01), 1e-3).unwrap();
    assert_eq!(b.eps_lo, 0.0);
    assert!(b.coercions > 0);
    assert_eq!(b.coercions + 1, b.evaluations);
}

#[test]
fn smooth_boundary_has_no_cusps() {
    let region = Region { mu1: (0.0, 0.7), mu2: (0.0, 1.2) };
    let r = find_cusps(|x, y| Ok(x * x + y * y < 1.0), region, &CuspSettings { columns: 21, ..Default::default() }).unwrap();
    assert_eq!(r.boundary.len(), 21);
    assert!(r.cusps.is_empty(), "{:?}", r.cusps);
    for p in &r.boundary {
        assert!((p.mu2() - (1.0 - p.mu1 * p.mu1).sqrt()).abs() < 2e-3);
    }
}

#[test]
fn corner_is_found_and_missing_crossings_are_skipped() {
    // boundary mu2 = 1 - |mu1 - 0.5|, a corner at (0.5, 1); no crossing for mu1 > 0.9
    let region = Region { mu1: (0.0, 1.0), mu2: (0.0, 1.5) };
    let oracle = |x: f64, y: f64| Ok(x > 0.9 || y < 1.0 - (x - 0.5f64).abs());
    let r = find_cusps(oracle, region, &CuspSettings { columns: 11, ..Default::default() }).unwrap();
    assert_eq!(r.skipped.len(), 1);
    assert_eq!(r.cusps.len(), 1, "{:?}", r.cusps);
    assert!((r.cusps[0].mu1 - 0.5).abs() < 1e-12 && (r.cusps[0].mu2 - 1.0).abs() < 2e-3);
    assert!(r.cusps[0].turn_deg > 60.0);
}

#[test]
fn oracle_errors_propagate() {
    let region = Region { mu1: (0.0, 1.0), mu2: (0.0, 1.0) };
    assert!(find_cusps(|_, _| Err(Error::Config("x".into())), region, &CuspSettings::default()).is_err());
    assert!(find_cusps(|_, _| Ok(true), Region { mu1: (1.0, 0.0), mu2: (0.0, 1.0) }, &CuspSettings::default()).is_err());
}

#[test]
fn conjugation_domain_lies_inside_the_renormalization_domain() {
    let ax = Axis::new(0.0, 0.03, 10).unwrap();
    let conj = run_grid(&ScanConfig::new(Family::Golden2d, Method::Conjugation, ax, ax), 0).unwrap();
    let renorm = run_grid(&ScanConfig::new(Family::Golden2d, Method::RenormAdaptive, ax, ax), 0).unwrap();
    let outside = conj.iter().zip(&renorm).filter(|(c, r)| c.status == Status::Converged && r.status != Status::Converged).count();
    assert!(outside <= 2, "{outside} cells");
    assert!(conj.iter().any(|c| c.status == Status::Diverged));
    assert_eq!(conj[0].status, Status::Converged);
}
