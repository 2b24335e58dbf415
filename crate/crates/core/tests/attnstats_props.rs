use halluprobe_core::attnstats::{
    diagonal_entropy, last_token_attention, read_attention_file, row_entropy, stats, write_attention_file,
    AttentionFile, AttentionMatrix, AttentionStore, LogBase,
};
use proptest::prelude::*;

fn stochastic(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, cols), rows).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect()
    })
}

fn shaped() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..8, 1usize..8).prop_flat_map(|(t, s)| stochastic(t, s))
}

proptest! {
    #[test]
    fn statistics_stay_in_range(rows in shaped()) {
        let m = AttentionMatrix::from_rows(0, "base", &rows).unwrap();
        let s = stats(&m, LogBase::Natural);
        let cols = rows[0].len() as f64;
        prop_assert!(s.row_entropy >= 0.0 && s.row_entropy <= cols.ln() + 1e-9);
        prop_assert!(s.diagonal_entropy >= 0.0 && s.diagonal_entropy <= (rows.len() as f64).ln() + 1e-9);
        prop_assert!((0.0..=1.0).contains(&s.last_token_attention));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s.diagonal_mass));
    }

    #[test]
    fn log_bases_differ_by_ln2(rows in shaped()) {
        let m = AttentionMatrix::from_rows(0, "base", &rows).unwrap();
        let nat = row_entropy(&m, LogBase::Natural);
        let two = row_entropy(&m, LogBase::Two);
        prop_assert!((nat - two * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn file_round_trip(rows in shaped(), id in 0usize..1000) {
        let m = AttentionMatrix::from_rows(id, "perturbed", &rows).unwrap();
        let text = AttentionFile::from_matrix(&m).to_text();
        let back = AttentionFile::parse(&text, std::path::Path::new("x.attn")).unwrap().into_matrix().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn heads_are_averaged(a in stochastic(3, 4), b in stochastic(3, 4)) {
        let flat = |r: &Vec<Vec<f64>>| r.concat();
        let m = AttentionMatrix::from_heads(1, "base", 3, 4, &[flat(&a), flat(&b)]).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                prop_assert!((m.row(i)[j] - (a[i][j] + b[i][j]) / 2.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn closed_form_cases() {
    let one_hot: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let m = AttentionMatrix::from_rows(0, "base", &one_hot).unwrap();
    assert_eq!(row_entropy(&m, LogBase::Natural), 0.0);

    let uniform = vec![vec![0.25; 4]; 5];
    let m = AttentionMatrix::from_rows(0, "base", &uniform).unwrap();
    assert!((row_entropy(&m, LogBase::Natural) - 4f64.ln()).abs() < 1e-9);
    assert_eq!(last_token_attention(&m), 0.25);

    let rows = vec![vec![0.5, 0.25, 0.25], vec![0.2, 0.6, 0.2], vec![0.1, 0.1, 0.8]];
    let m = AttentionMatrix::from_rows(0, "base", &rows).unwrap();
    let h = |p: &[f64]| -p.iter().map(|x| x * x.ln()).sum::<f64>();
    let want_row = (h(&rows[0]) + h(&rows[1]) + h(&rows[2])) / 3.0;
    assert!((row_entropy(&m, LogBase::Natural) - want_row).abs() < 1e-9);
    let want_diag = h(&[0.5 / 1.9, 0.6 / 1.9, 0.8 / 1.9]);
    assert!((diagonal_entropy(&m, LogBase::Natural) - want_diag).abs() < 1e-9);
    assert!((last_token_attention(&m) - 1.25 / 3.0).abs() < 1e-9);
}

#[test]
fn rows_must_be_distributions() {
    assert!(AttentionMatrix::from_rows(0, "base", &[vec![0.5, 0.4]]).is_err());
    assert!(AttentionMatrix::from_rows(0, "base", &[vec![0.5, 0.50005]]).is_ok());
    assert!(AttentionMatrix::from_rows(0, "base", &[vec![-0.1, 1.1]]).is_err());
}

#[test]
fn store_loads_directory() {
    let dir = tempfile::tempdir().unwrap();
    for (id, variant) in [(3, "base"), (3, "perturbed"), (5, "base")] {
        let m = AttentionMatrix::from_rows(id, variant, &[vec![0.5, 0.5]]).unwrap();
        write_attention_file(
            &dir.path().join(format!("{id}.{variant}.attn")),
            &AttentionFile::from_matrix(&m),
        )
        .unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let store = AttentionStore::load_dir(dir.path()).unwrap();
    assert_eq!(store.len(), 3);
    let (agg, missing) = store.aggregate_set(&[3, 5, 9], "base", LogBase::Natural);
    assert_eq!(agg.unwrap().count, 2);
    assert_eq!(missing, [9]);
    assert!(read_attention_file(&dir.path().join("3.base.attn")).is_ok());
}
