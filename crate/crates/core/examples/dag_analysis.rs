//! Simulate a contested chain, write its event log and tabulate wasted blocks.
use poolsim::detection::{analyze_dag, write_table_csv, TableRow};
use poolsim::sim::{run, MinerSpec, SimConfig, Strategy};
use poolsim::CartelId;

fn main() -> poolsim::Result<()> {
    let cfg = SimConfig {
        gamma: 0.5,
        natural_fork_rate: 0.01,
        ..SimConfig::new(
            vec![
                MinerSpec::solo("honest", 0.7, Strategy::Honest),
                MinerSpec::solo(
                    "cartel",
                    0.3,
                    Strategy::SelfishMember {
                        cartel: CartelId::new("c"),
                    },
                ),
            ],
            50_000,
            11,
        )
    };
    let result = run(&cfg)?;
    let log = std::env::temp_dir().join("poolsim-dag-example.csv");
    result.write_event_log(std::fs::File::create(&log)?)?;
    println!("event log: {}", log.display());

    let records: Vec<_> = result.records().collect();
    let analysis = analyze_dag(&records, 10_000)?;
    let rows: Vec<TableRow> = analysis.windows.iter().map(TableRow::from).collect();
    write_table_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
