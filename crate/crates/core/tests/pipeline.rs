use clutchsim::config::Config;
use clutchsim::driveline::Configuration;
use clutchsim::mlp::{self, MlpModel, TrainingData};
use clutchsim::sweep::{self, AxisRange, EngagementDataset, GridSpec, SURFACE_HEADER};

fn small_grid(c: Configuration) -> GridSpec {
    GridSpec {
        mass: AxisRange::new(0.05, 0.5, 4),
        preload: AxisRange::new(20.0, 300.0, 4),
        configuration: c,
        operating_speed_max: 400.0,
        jitter_samples: 8,
    }
}

#[test]
fn dataset_csv_round_trips() {
    let cfg = Config::default();
    let ds = sweep::generate_dataset(
        &small_grid(Configuration::A),
        &cfg.clutch_params(),
        &cfg.driveline_params(),
        &cfg.engagement_scenario(),
        &cfg.sim_config(),
        3,
    )
    .unwrap();
    assert_eq!(ds.samples.len(), 16 + 8);
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), SURFACE_HEADER);
    let back = EngagementDataset::read_csv(buf.as_slice(), "mem").unwrap();
    assert_eq!(back.labels(), ds.labels());
    let mut again = Vec::new();
    back.write_csv(&mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn surface_csv_leaves_speed_blank_when_not_engaged() {
    let cfg = Config::default();
    let clutch = cfg.clutch_params();
    let mut grid = small_grid(Configuration::B);
    grid.mass = AxisRange::new(0.1, 0.2, 2);
    grid.preload = AxisRange::new(5e5, 6e5, 2);
    let surface = sweep::sweep_engagement_speed(
        &grid,
        &clutch,
        &cfg.driveline_params(),
        &cfg.engagement_scenario(),
        &cfg.sim_config(),
    )
    .unwrap();
    let mut buf = Vec::new();
    sweep::write_surface_csv(&mut buf, &surface, 400.0).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "0.1,500000,,0");
    assert!(text.lines().skip(1).all(|l| l.ends_with(",,0")));
}

#[test]
fn trained_model_survives_a_file_round_trip() {
    let cfg = Config::default();
    let ds = sweep::generate_dataset(
        &small_grid(Configuration::A),
        &cfg.clutch_params(),
        &cfg.driveline_params(),
        &cfg.engagement_scenario(),
        &cfg.sim_config(),
        5,
    )
    .unwrap();
    let mut tc = cfg.train_config();
    tc.epochs = 100;
    let (model, _) = mlp::train(&TrainingData::from(&ds), &cfg.mlp_spec(2), &tc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = MlpModel::load(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), loaded.to_json());
    for s in &ds.samples {
        let f = [s.shoe_mass, s.preload];
        assert_eq!(model.forward(&f).unwrap(), loaded.forward(&f).unwrap());
    }
}
