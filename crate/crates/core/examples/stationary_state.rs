// Stationary states and covariance classes of the two reference qubit channels.

use qfluct::presets::{P, S};
use qfluct::{build_covariant, build_incovariant, check_covariance, stationary_state, ChannelClass, KrausChannel};

pub struct Summary {
    pub label: String,
    pub populations: Vec<f64>,
    pub class: ChannelClass,
}

pub fn run() -> qfluct::Result<Vec<Summary>> {
    let channels: [KrausChannel; 2] = [build_incovariant(P, S)?, build_covariant(P, S)?];
    channels
        .iter()
        .map(|ch| {
            let gamma = stationary_state(ch)?;
            Ok(Summary {
                label: ch.label().to_owned(),
                populations: gamma.populations().to_vec(),
                class: check_covariance(ch, &gamma)?,
            })
        })
        .collect()
}

fn main() -> qfluct::Result<()> {
    for s in run()? {
        println!("{:<12} r = {:.4?}  class = {}", s.label, s.populations, s.class.name());
        if let ChannelClass::Incovariant { witness } = s.class {
            println!("             coherence transfer {:?}", witness);
        }
    }
    Ok(())
}
