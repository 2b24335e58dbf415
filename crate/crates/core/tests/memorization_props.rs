mod common;

use halluprobe_core::memorization::{
    mem_values_from_scores, plan_subsets, reflag, select_sets, Membership, RunManifest,
};
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = (Vec<Vec<bool>>, Vec<Vec<f64>>)> {
    (2usize..40, 2usize..8).prop_flat_map(|(n, t)| {
        (
            prop::collection::vec(prop::collection::vec(any::<bool>(), n), t),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), t),
        )
    })
}

fn membership(rows: &[Vec<bool>]) -> Membership {
    let n = rows[0].len();
    let lists: Vec<Vec<usize>> = rows.iter().map(|r| (0..n).filter(|&i| r[i]).collect()).collect();
    Membership::from_id_lists(n, &lists).unwrap()
}

proptest! {
    #[test]
    fn mem_values_match_double_loop((rows, scores) in grid(), min_excl in 1usize..4) {
        let m = membership(&rows);
        let cells: Vec<Vec<Option<f64>>> = scores.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect();
        let recs = mem_values_from_scores(&m, &cells, min_excl).unwrap();
        for (i, rec) in recs.iter().enumerate() {
            prop_assert_eq!(rec.sample_id, i);
            let want = common::mem_value(&rows, &scores, i);
            match (rec.mem_value, want) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                other => prop_assert!(false, "definedness differs: {:?}", other),
            }
            let excluded = rows.iter().filter(|r| !r[i]).count();
            prop_assert_eq!(rec.n_excluded, excluded);
            prop_assert_eq!(rec.eligible, want.is_some() && excluded >= min_excl);
        }
    }

    #[test]
    fn mem_values_lie_in_unit_interval((rows, scores) in grid()) {
        let m = membership(&rows);
        let cells: Vec<Vec<Option<f64>>> = scores.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect();
        for r in mem_values_from_scores(&m, &cells, 1).unwrap() {
            if let Some(v) = r.mem_value {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn eligibility_shrinks_with_threshold((rows, scores) in grid()) {
        let m = membership(&rows);
        let cells: Vec<Vec<Option<f64>>> = scores.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect();
        let base = mem_values_from_scores(&m, &cells, 1).unwrap();
        let mut prev = usize::MAX;
        for c in 1..6 {
            let n = reflag(&base, c).iter().filter(|r| r.eligible).count();
            prop_assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn planned_subsets_have_exact_size(n in 4usize..200, t in 2usize..10, seed: u64) {
        let m = n / 2;
        let plan = plan_subsets(n, t, m, seed).unwrap();
        prop_assert!((0..t).all(|k| plan.subset_size(k) == m));
        prop_assert_eq!(plan, plan_subsets(n, t, m, seed).unwrap());
    }

    #[test]
    fn comparison_sets_are_disjoint_and_deterministic(n in 20usize..120, t in 3usize..8, seed: u64) {
        let plan = plan_subsets(n, t, n / 2, 3).unwrap();
        let cells: Vec<Vec<Option<f64>>> = (0..t)
            .map(|k| (0..n).map(|i| Some(((i * 31 + k * 7) % 17) as f64 / 17.0)).collect())
            .collect();
        let recs = mem_values_from_scores(&plan, &cells, 1).unwrap();
        let eligible = recs.iter().filter(|r| r.eligible).count();
        prop_assume!(eligible >= 10);
        let k = eligible / 4;
        let a = select_sets(&recs, k, seed, f64::NEG_INFINITY).unwrap();
        prop_assert_eq!(a.memorized.len(), k);
        prop_assert_eq!(a.random.len(), k);
        prop_assert!(a.random.iter().all(|id| !a.memorized.contains(id)));
        prop_assert_eq!(a, select_sets(&recs, k, seed, f64::NEG_INFINITY).unwrap());
    }
}

#[test]
fn planted_sample_ranks_first() {
    let (n, t) = (200, 10);
    let plan = plan_subsets(n, t, 100, 11).unwrap();
    let planted = 137;
    let cells: Vec<Vec<Option<f64>>> = (0..t)
        .map(|k| {
            (0..n)
                .map(|i| {
                    if i == planted {
                        Some(if plan.contains(k, i) { 1.0 } else { 0.0 })
                    } else {
                        Some(0.5 + 0.4 * (((i * 13 + k * 5) % 11) as f64 / 11.0 - 0.5))
                    }
                })
                .collect()
        })
        .collect();
    let recs = mem_values_from_scores(&plan, &cells, 1).unwrap();
    let sets = select_sets(&recs, 5, 0, f64::NEG_INFINITY).unwrap();
    assert_eq!(sets.memorized[0], planted);
}

#[test]
fn manifest_round_trip_through_disk() {
    use halluprobe_core::memorization::{ManifestHeader, ModelFiles, ModelOutputs};
    use halluprobe_core::metrics::{Metric, MetricKind};

    let plan = plan_subsets(6, 3, 3, 5).unwrap();
    let outputs = (0..3)
        .map(|k| ModelOutputs::Hypotheses((0..6).map(|i| Some(format!("h{k} s{i}"))).collect()))
        .collect();
    let header = ManifestHeader {
        n: 6,
        t: 3,
        m: 3,
        seed: 5,
        metric: Some("chrf".into()),
        membership: "membership.txt".into(),
        index: "index.txt".into(),
        references: Some("refs.txt".into()),
        models: (0..3)
            .map(|k| ModelFiles::Hypotheses(format!("model{k}.hyp")))
            .collect(),
    };
    let mut manifest = RunManifest::new(header, plan, outputs).unwrap();
    manifest.references = Some((0..6).map(|i| format!("h0 s{i}")).collect());
    let dir = tempfile::tempdir().unwrap();
    manifest.write(dir.path()).unwrap();
    let back = RunManifest::load(dir.path()).unwrap();
    let metric = Metric::new(MetricKind::chrf());
    assert_eq!(
        manifest.score_matrix(None, &metric).unwrap(),
        back.score_matrix(None, &metric).unwrap()
    );
}
