use std::fs;

use tsmcf::io::{
    generate_scenario, load_detections, read_cmc, read_config, read_embeddings, read_mot,
    read_scenario_spec, write_embeddings, write_mot, write_scenario, MotRecord, EMBEDDING_MAGIC,
};
use tsmcf::model::BBox;
use tsmcf::Error;

fn rec(frame: u32, id: i64, l: f64) -> MotRecord {
    MotRecord {
        frame,
        id,
        bbox: BBox::from_ltwh(l, 20.0, 30.5, 60.25).unwrap(),
        score: 0.8125,
    }
}

#[test]
fn mot_round_trip_sorts_and_keeps_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.txt");
    write_mot(&path, &[rec(3, 2, 10.0), rec(0, 5, 1.5), rec(3, 1, 200.0)]).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "1,5,1.50,20.00,30.50,60.25,0.8125,-1,-1,-1"
    );
    let back = read_mot(&path).unwrap();
    assert_eq!(back.records.len(), 3);
    assert_eq!(back.skipped, 0);
    let keys: Vec<_> = back.records.iter().map(|r| (r.frame, r.id)).collect();
    assert_eq!(keys, [(0, 5), (3, 1), (3, 2)]);
    for r in &back.records {
        let [_, _, w, h] = r.bbox.ltwh();
        assert!((w - 30.5).abs() < 1e-9 && (h - 60.25).abs() < 1e-9);
    }
}

#[test]
fn mot_reader_reports_the_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("det.txt");
    fs::write(
        &path,
        "1,-1,0,0,10,10,0.9,-1,-1,-1\n2,-1,0,0,10,ten,0.9,-1,-1,-1\n",
    )
    .unwrap();
    match read_mot(&path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }

    fs::write(&path, "0,-1,0,0,10,10,0.9,-1,-1,-1\n").unwrap();
    assert!(matches!(read_mot(&path), Err(Error::Parse { line: 1, .. })));

    fs::write(&path, "1,-1,0,0,10,10,0.9\n").unwrap();
    assert!(matches!(read_mot(&path), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn mot_reader_skips_empty_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("det.txt");
    fs::write(
        &path,
        "1,-1,0,0,10,10,0.9,-1,-1,-1\n1,-1,5,5,0,10,0.9,-1,-1,-1\n2,-1,0,0,10,-3,0.9,-1,-1,-1\n",
    )
    .unwrap();
    let data = read_mot(&path).unwrap();
    assert_eq!(data.records.len(), 1);
    assert_eq!(data.skipped, 2);
    assert_eq!(data.total_rows, 3);
}

#[test]
fn embeddings_round_trip_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.bin");
    write_embeddings(&path, &[vec![3.0, 4.0], vec![0.0, 2.0]], 2).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], EMBEDDING_MAGIC);
    assert_eq!(bytes.len(), 16 + 2 * 2 * 4);

    let e = read_embeddings(&path, 2, 2).unwrap();
    assert!((e[0].as_slice()[0] - 0.6).abs() < 1e-6);
    assert!((e[1].as_slice()[1] - 1.0).abs() < 1e-12);

    assert!(matches!(
        read_embeddings(&path, 3, 2),
        Err(Error::Format { .. })
    ));
    assert!(matches!(
        read_embeddings(&path, 2, 4),
        Err(Error::Format { .. })
    ));
    fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(
        read_embeddings(&path, 2, 2),
        Err(Error::Format { .. })
    ));
    fs::write(&path, b"NOPE").unwrap();
    assert!(matches!(
        read_embeddings(&path, 0, 0),
        Err(Error::Format { .. })
    ));
}

#[test]
fn zero_vector_embedding_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.bin");
    write_embeddings(&path, &[vec![0.0, 0.0]], 2).unwrap();
    assert!(read_embeddings(&path, 1, 2).is_err());
}

#[test]
fn detections_align_with_embedding_rows() {
    let dir = tempfile::tempdir().unwrap();
    let dets = dir.path().join("det.txt");
    let emb = dir.path().join("emb.bin");
    fs::write(
        &dets,
        "2,-1,0,0,10,10,0.9,-1,-1,-1\n1,-1,50,0,10,10,0.3,-1,-1,-1\n1,-1,50,0,0,10,0.3,-1,-1,-1\n",
    )
    .unwrap();
    write_embeddings(&emb, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], 2).unwrap();
    let loaded = load_detections(&dets, &emb, 2).unwrap();
    assert_eq!(loaded.len(), 2);
    assert_eq!((loaded[0].frame, loaded[0].source), (1, 0));
    assert_eq!(loaded[1].embedding.as_slice(), &[0.0, 1.0]);

    write_embeddings(&emb, &[vec![1.0, 0.0]], 2).unwrap();
    assert!(load_detections(&dets, &emb, 2).is_err());
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tsmcf.cfg");
    fs::write(
        &path,
        "# tuned\ntau = 0.5\nwindow_size = 30  # longer\ncontact_mask = false\n",
    )
    .unwrap();
    let c = read_config(&path).unwrap();
    assert_eq!(c.tau, 0.5);
    assert_eq!(c.window_size, 30);
    assert!(!c.contact_mask);
    assert_eq!(c.window_overlap, 2);

    fs::write(&path, "tua = 0.5\n").unwrap();
    let err = read_config(&path).unwrap_err().to_string();
    assert!(err.contains("tua"), "{err}");
    fs::write(&path, "window_overlap = 20\n").unwrap();
    assert!(read_config(&path).is_err());
}

#[test]
fn cmc_file_uses_one_based_frames() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cmc.txt");
    fs::write(&path, "1,1,0,10,0,1,0\n3,2,0,0,0,2,0\n").unwrap();
    let t = read_cmc(&path).unwrap();
    assert_eq!(t.iter().map(|t| t.frame).collect::<Vec<_>>(), [0, 2]);
    let moved = t[0]
        .apply(&BBox::new(0.0, 0.0, 10.0, 10.0).unwrap())
        .unwrap();
    assert_eq!(moved, BBox::new(10.0, 0.0, 20.0, 10.0).unwrap());

    fs::write(&path, "1,1,0,0,0,1,0\n1,1,0,0,0,1,0\n").unwrap();
    assert!(matches!(read_cmc(&path), Err(Error::Parse { line: 2, .. })));
    fs::write(&path, "1,1,0,inf,0,1,0\n").unwrap();
    assert!(read_cmc(&path).is_err());
}

#[test]
fn scenario_files_are_consistent() {
    let spec = read_scenario_spec(
        "n_targets = 4\nn_frames = 30\ncrossings = 1\nseed = 9\nfp_rate = 1.0\n",
    )
    .unwrap();
    let scenario = generate_scenario(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(dir.path(), &scenario).unwrap();

    let gt = read_mot(&dir.path().join("gt.txt")).unwrap();
    assert_eq!(gt.records.len(), scenario.gt.len());
    let dets = load_detections(
        &dir.path().join("det.txt"),
        &dir.path().join("emb.bin"),
        spec.embedding_dim,
    )
    .unwrap();
    assert_eq!(dets.len(), scenario.detections.len());
    assert!(dets.iter().enumerate().all(|(i, d)| d.source == i));
    assert!(dets.windows(2).all(|w| w[0].frame <= w[1].frame));

    let again = generate_scenario(&spec).unwrap();
    assert_eq!(again, scenario);
}

#[test]
fn scenario_spec_rejects_nonsense() {
    assert!(read_scenario_spec("n_targets = 40\nembedding_dim = 8\n").is_err());
    assert!(read_scenario_spec("n_targets = 3\ncrossings = 3\n").is_err());
    assert!(read_scenario_spec("colour = red\n").is_err());
    let explicit =
        read_scenario_spec("target = 100 100 1 0 40 100\ntarget = 300 100 -1 0 40 100\n").unwrap();
    assert_eq!(explicit.targets.len(), 2);
}
