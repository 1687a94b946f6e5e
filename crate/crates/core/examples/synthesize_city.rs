// Generates a small synthetic city, writes it to disk and reads it back.

use twostage::pipeline::{ingest, synthesize, write_dataset, SyntheticSpec};

pub fn run_example() -> twostage::Result<()> {
    let spec = SyntheticSpec {
        train_days: 14,
        test_days: 2,
        seed: 7,
        ..SyntheticSpec::default()
    };
    let dataset = synthesize(&spec, "example")?;
    let dir = tempfile::tempdir().map_err(|e| twostage::Error::io(std::env::temp_dir(), e))?;
    write_dataset(dir.path(), &dataset)?;
    let back = ingest(dir.path(), "example")?;
    assert_eq!(back.graph, dataset.graph);
    assert_eq!(back.train.len(), dataset.train.len());

    let labeled: usize = back.train.iter().map(|s| s.congestion.len()).sum();
    println!(
        "{} nodes ({} counters), {} edges, {} super-segments",
        back.graph.nodes.len(),
        back.graph.counter_nodes().len(),
        back.graph.edges.len(),
        back.graph.supersegments.len()
    );
    println!(
        "{} train and {} test snapshots, {labeled} congestion labels in training",
        back.train.len(),
        back.test.len()
    );
    Ok(())
}

fn main() -> twostage::Result<()> {
    run_example()
}
