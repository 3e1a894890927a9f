use clap::Parser;
use vqebo::harness::{ExperimentConfig, Method, NoiseModel};
use vqebo::optim::Inducer;
use vqebo_cli::{parse_seeds, parse_triple, to_args, Cli, Command};

fn parse(args: &[String]) -> ExperimentConfig {
    let cli = Cli::try_parse_from(std::iter::once("vqebo".to_string()).chain(args.iter().cloned())).unwrap();
    match cli.command {
        Command::Run(a) => a.to_config().unwrap(),
        Command::Rerun { .. } => panic!("expected run"),
    }
}

#[test]
fn documented_flags_parse() {
    let args: Vec<String> = [
        "run",
        "--n-qbits", "5",
        "--n-layers", "3",
        "--circuit", "esu2",
        "--pbc", "False",
        "--j-couplings", "(-1.0, 0.0, 0.0)",
        "--h-couplings", "(0.0, 0.0, -1.0)",
        "--n-readout", "1024",
        "--n-iter", "300",
        "--kernel", "vqe",
        "--hyperopt", "optim=grid,steps=120,max_gamma=20,interval=100*1+20*9+10*100,loss=mll",
        "--acq-params", "func=ei,optim=emicore,pairsize=20,gridsize=100,corethresh=1.0,corethresh_width=10,coremin_scale=0.1,corethresh_scale=10,samplesize=100,smo-steps=0,smo-axis=True",
        "--inducer", "last_slack:retain=100:slack=20",
        "--seeds", "0..50",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let cfg = parse(&args);
    assert_eq!(cfg.dim(), 40);
    assert_eq!(cfg.seeds.len(), 50);
    assert_eq!(cfg.run.max_iter, Some(300));
    assert_eq!(cfg.kernel.sigma0_sq, 36.0);
    assert_eq!((cfg.acq.kappa.c0, cfg.acq.kappa.c1), (0.1, 10.0));
    assert_eq!(cfg.run.inducer, Inducer::LastSlack { retain: 100, slack: 20 });
    assert_eq!(cfg.methods, vec![Method::NftSeq, Method::NftRand, Method::Emicore]);
}

#[test]
fn config_round_trips_through_flags() {
    let mut cfg = ExperimentConfig::ising(3, 2);
    cfg.methods = vec![Method::BoEi, Method::Emicore];
    cfg.seeds = vec![4, 9, 1];
    cfg.run.max_iter = Some(17);
    cfg.run.inducer = Inducer::LastSlack { retain: 50, slack: 5 };
    cfg.noise = NoiseModel::Fixed(0.0025);
    cfg.acq.kappa.c1 = 10.0;
    cfg.deterministic = true;
    cfg.kernel.gamma = 3.25;
    assert_eq!(parse(&to_args(&cfg)), cfg);
}

#[test]
fn helper_grammars() {
    assert_eq!(parse_triple("(1, -2.5, 0)").unwrap(), [1.0, -2.5, 0.0]);
    assert_eq!(parse_triple("1,1,1").unwrap(), [1.0; 3]);
    assert!(parse_triple("(1, 2)").is_err());
    assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4]);
    assert_eq!(parse_seeds("7,3").unwrap(), vec![7, 3]);
    assert!(parse_seeds("x").is_err());
}

#[test]
fn bad_values_are_rejected() {
    let cli = Cli::try_parse_from(["vqebo", "run", "--circuit", "twolocal"]).unwrap();
    let Command::Run(a) = cli.command else { panic!() };
    assert!(a.to_config().is_err());
    let cli = Cli::try_parse_from(["vqebo", "run", "--methods", "sgd"]).unwrap();
    let Command::Run(a) = cli.command else { panic!() };
    assert!(a.to_config().is_err());
}
