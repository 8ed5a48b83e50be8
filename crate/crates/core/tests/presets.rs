use aggdiff::config::{preset, Estimator};
use aggdiff::harness::run_convergence;

#[test]
fn half_grid_estimator_brackets_the_true_error_on_barenblatt() {
    let mut spec = preset("barenblatt-1d").unwrap();
    spec.estimator = Estimator::Eps2;
    let study = run_convergence(&spec, false).unwrap();
    for row in &study.rows[..study.rows.len() - 1] {
        let (e1, e2) = (row.eps1.unwrap(), row.eps2.unwrap());
        assert!(e2 <= 2.0 * (e1 + 1e-3), "h = {}: eps2 {e2} vs eps1 {e1}", row.h);
        assert!(e2 > 0.0);
    }
}

#[test]
fn snapshots_follow_the_cadence() {
    let mut spec = preset("envelope-bump").unwrap();
    spec.final_time = 0.1; // 40 steps, cadence ceil(40 / 50) = 1
    spec.snapshot_every = Some(15);
    let t = aggdiff::harness::simulate(&spec, 0.05, aggdiff::harness::RunOptions { keep_history: false, keep_snapshots: true }).unwrap();
    let steps: Vec<usize> = t.snapshots.iter().map(|s| s.time_index).collect();
    assert_eq!(steps, vec![0, 15, 30, 40]);
}

#[test]
fn steady_peanut_snapshot_has_one_row_per_cell() {
    let spec = preset("steady-peanut").unwrap();
    let grid = aggdiff::grid::Grid::new(
        &aggdiff::grid::MeshSpec::uniform(spec.h[0], 2).unwrap(),
        &spec.domain.build().unwrap(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let state = spec.initial_datum().unwrap().sample(&grid, spec.tau_for(spec.h[0])).unwrap();
    let path = dir.path().join("s.csv");
    aggdiff::output::write_snapshot(&path, &grid, &state).unwrap();
    let rows = std::fs::read_to_string(path).unwrap().lines().count() - 1;
    assert_eq!(rows, grid.len());
    assert!(state.values.iter().all(|&v| v == 0.6));
}
