use super::*;

fn row(n: usize, kind: SolverKind, k_d: usize, evaluations: usize) -> ResultRow {
    ResultRow {
        problem: format!("p{n}"),
        n,
        kind,
        k_d,
        mask: (1..=k_d).collect(),
        seed: 0,
        noise: NoiseMode::None,
        evaluations,
        f_final: 0.0,
        x_error: 0.0,
        success: true,
    }
}

fn csv_of(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn empty_plan_writes_header_only() {
    let rows = run_plan(&ExperimentPlan::default()).unwrap();
    assert!(rows.is_empty());
    assert_eq!(csv_of(&rows), format!("{}\n", RESULT_HEADER.join(",")));
}

#[test]
fn unknown_problem_fails_before_running() {
    let plan = ExperimentPlan {
        problems: vec!["rosenbrock2".into(), "nope".into()],
        ..ExperimentPlan::default()
    };
    assert!(matches!(plan.expand(), Err(Error::UnknownProblem(p)) if p == "nope"));
    assert!(matches!(run_plan(&plan), Err(Error::UnknownProblem(_))));
}

#[test]
fn masks_are_enumerated_or_sampled() {
    assert_eq!(enumerate_masks(&[0, 1], 1, 0), vec![vec![0], vec![1]]);
    assert_eq!(enumerate_masks(&[0, 1], 2, 0), vec![vec![0, 1]]);
    assert!(enumerate_masks(&[0, 1], 3, 0).is_empty());
    let dirs: Vec<usize> = (0..10).collect();
    assert_eq!(enumerate_masks(&dirs, 1, 0).len(), 10);
    let a = enumerate_masks(&dirs, 4, 7);
    assert_eq!(a.len(), 3);
    assert_eq!(a, enumerate_masks(&dirs, 4, 7));
    for m in &a {
        assert_eq!(m.len(), 4);
        assert!(m.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(a[0] != a[1] && a[1] != a[2] && a[0] != a[2]);
}

#[test]
fn plan_expansion_counts() {
    let plan = ExperimentPlan {
        problems: vec!["rosenbrock2".into()],
        kinds: vec![SolverKind::Bobyqa, SolverKind::HermiteLs],
        kd: vec![1, 2],
        seeds: vec![0, 1],
        ..ExperimentPlan::default()
    };
    let runs = plan.expand().unwrap();
    // Bobyqa: 1 mask; Hermite LS: {1}, {2}, {1,2}; two seeds each
    assert_eq!(runs.len(), 8);
    assert!(runs.iter().enumerate().all(|(i, r)| r.index == i));
    assert!(runs[..2].iter().all(|r| r.mask.is_empty()));
}

#[test]
fn hermite_least_squares_beats_bobyqa_on_rosenbrock() {
    let plan = ExperimentPlan {
        problems: vec!["rosenbrock2".into()],
        kinds: vec![SolverKind::Bobyqa, SolverKind::HermiteLs],
        kd: vec![1],
        budget: 500,
        ..ExperimentPlan::default()
    };
    let rows = run_plan(&plan).unwrap();
    let bob = rows.iter().find(|r| r.kind == SolverKind::Bobyqa).unwrap();
    let hls: Vec<_> = rows.iter().filter(|r| r.kind == SolverKind::HermiteLs).collect();
    assert_eq!(hls.len(), 2);
    let second = hls.iter().find(|r| r.mask == vec![2]).unwrap();
    assert!(second.evaluations < bob.evaluations);
    assert!(rows.iter().all(|r| r.success));
}

#[test]
fn results_are_deterministic_and_round_trip() {
    let plan = ExperimentPlan {
        problems: vec!["rosenbrock2".into(), "sphere3".into()],
        kinds: SolverKind::ALL.to_vec(),
        noise: NoiseMode::Low,
        seeds: vec![3, 4],
        budget: 120,
        ..ExperimentPlan::default()
    };
    let a = csv_of(&run_plan(&plan).unwrap());
    let b = csv_of(&run_plan(&plan).unwrap());
    assert_eq!(a, b);
    let back = read_results(a.as_bytes()).unwrap();
    assert_eq!(csv_of(&back), a);
}

#[test]
fn summary_means_and_deltas() {
    let rows = vec![
        row(2, SolverKind::Bobyqa, 0, 100),
        row(2, SolverKind::HermiteLs, 1, 40),
        row(2, SolverKind::HermiteLs, 1, 60),
        row(2, SolverKind::HermiteBobyqa, 1, 66),
        row(3, SolverKind::FullInterp, 0, 30),
    ];
    let s = summarize(&rows);
    assert_eq!(s.len(), 4);
    let hls = s.iter().find(|r| r.kind == SolverKind::HermiteLs).unwrap();
    assert_eq!(hls.runs, 2);
    assert_eq!(hls.mean_evaluations, 50.0);
    let hb = s.iter().find(|r| r.kind == SolverKind::HermiteBobyqa).unwrap();
    assert!((hb.delta_vs_bobyqa.unwrap() + 34.0).abs() < 1e-12);
    let base = s.iter().find(|r| r.kind == SolverKind::Bobyqa).unwrap();
    assert_eq!(base.delta_vs_bobyqa, Some(0.0));
    let lone = s.iter().find(|r| r.n == 3).unwrap();
    assert_eq!(lone.mean_evaluations, 30.0);
    assert_eq!(lone.delta_vs_bobyqa, None);

    let mut buf = Vec::new();
    write_summary_csv(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().last().unwrap().ends_with(','));
}

#[test]
fn malformed_results_are_rejected() {
    let bad_header = "problem,n\nx,2\n";
    assert!(matches!(read_results(bad_header.as_bytes()), Err(Error::MalformedInput(_))));
    let good = csv_of(&[row(2, SolverKind::Bobyqa, 0, 10)]);
    let bad_count = good.replace(",10,", ",ten,");
    assert!(matches!(read_results(bad_count.as_bytes()), Err(Error::MalformedInput(_))));
    let bad_kind = good.replace("bobyqa", "simplex");
    assert!(matches!(read_results(bad_kind.as_bytes()), Err(Error::MalformedInput(_))));
    assert!(read_results(good.as_bytes()).is_ok());
}

#[test]
fn trace_export_requires_rows() {
    let plan = ExperimentPlan {
        problems: vec!["rosenbrock2".into()],
        kinds: vec![SolverKind::HermiteLs],
        kd: vec![2],
        budget: 40,
        ..ExperimentPlan::default()
    };
    let run = &plan.expand().unwrap()[0];
    let r = plan.execute(run, false).unwrap();
    let mut a = Vec::new();
    trace_export(&r.trace, &mut a).unwrap();
    let text = String::from_utf8(a.clone()).unwrap();
    assert_eq!(text.lines().count(), r.trace.len() + 1);
    // diagnostic off: the last column is empty
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')));
    let mut b = Vec::new();
    trace_export(&r.trace, &mut b).unwrap();
    assert_eq!(a, b);
    assert!(trace_export(&RunTrace::default(), Vec::new()).is_err());
}
