use skillgap::features::{load_manifest, write_feature_file, Manifest, ManifestEntry};
use skillgap::fewshot::{prepare_items, run_protocol, FewShotError, HeadKind, ProtocolConfig, SkillClass};
use skillgap::synthetic::{skill_dataset, SkillDataConfig};

fn mean_accuracy(separation: f64, seed: u64) -> f64 {
    let set = skill_dataset(&SkillDataConfig { dim: 32, separation, seed, ..Default::default() }).unwrap();
    let items = prepare_items(&set, false).unwrap();
    let cfg = ProtocolConfig { episodes: 20, master_seed: seed, threads: Some(1), ..ProtocolConfig::new(HeadKind::Linear, 2) };
    run_protocol(set.name(), &items, &cfg).unwrap().mean_accuracy
}

#[test]
fn accuracy_grows_with_class_separation() {
    for seed in 0..20 {
        let accs: Vec<f64> = [0.0, 2.0, 10.0].iter().map(|&s| mean_accuracy(s, seed)).collect();
        assert!(accs.windows(2).all(|w| w[0] <= w[1]), "seed {seed}: {accs:?}");
    }
}

#[test]
fn manifest_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SkillDataConfig { proficient: 4, expert: 3, snippets: 2, frames_per_snippet: 16, dim: 6, ..Default::default() };
    let set = skill_dataset(&cfg).unwrap();
    let mut videos = Vec::new();
    for v in set.videos() {
        let file = format!("{}.fsfb", v.video_id());
        write_feature_file(v, dir.path().join(&file)).unwrap();
        videos.push(ManifestEntry { id: v.video_id().to_owned(), file: file.into(), grs: v.grs() });
    }
    let manifest = Manifest { name: "toy".into(), dim: 6, videos };
    let path = dir.path().join("manifest.json");
    std::fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();

    let loaded = load_manifest(&path).unwrap();
    let items = prepare_items(&loaded, false).unwrap();
    assert_eq!(items.iter().filter(|i| i.label == SkillClass::Expert).count(), 3);
    assert!(items.iter().all(|i| i.features.frames_per_snippet() == 1));

    let cfg = ProtocolConfig { episodes: 5, threads: Some(1), ..ProtocolConfig::new(HeadKind::Linear, 2) };
    let report = run_protocol("toy", &items, &cfg).unwrap();
    assert_eq!(report.per_episode.len(), 5);
    for support in &report.config.episode_support {
        assert_eq!(support.len(), 4);
    }

    let too_many = ProtocolConfig { shot: 3, ..cfg };
    assert!(matches!(
        run_protocol("toy", &items, &too_many),
        Err(FewShotError::InsufficientClassSize { class: SkillClass::Expert, size: 3, shot: 3 })
    ));
}
