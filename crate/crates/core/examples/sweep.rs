//! A small capacity sweep: two message sizes at k=3 over three seeds, with
//! the H1 tally (more message bits should not lower BER).

use mshidden::metrics::{parse_seeds, parse_spec, sweep, SweepSpec};
use mshidden::synth::synth_images;
use mshidden::train::Dataset;

fn main() -> mshidden::Result<()> {
    let tuples = parse_spec("32,3,16;32,3,32").expect("valid spec");
    let seeds = parse_seeds("1,2,3").expect("valid seeds");
    let spec = SweepSpec::new(tuples, 300, seeds);
    let data = Dataset::from_images(synth_images(256, 40, 40, 300));
    let report = sweep(&spec, &data, |row| {
        println!(
            "({},{},{}) seed {}  rho {:.4}  BER {:?}  PSNR {:?}",
            row.tuple.block, row.tuple.k, row.tuple.msg_bits, row.seed, row.rho, row.ber, row.psnr_db
        );
    });
    let (holds, checked) = report.h1_tally();
    println!("H1 holds in {holds} of {checked} seed pairs");
    Ok(())
}
