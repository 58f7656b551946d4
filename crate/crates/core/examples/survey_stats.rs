//! Listening-survey means, register correlations and the derived quality profile.
//!
//! ```text
//! cargo run --example survey_stats -- [ratings.csv]
//! ```

use pianoq::survey::{aggregate_survey, correlation_matrix, SurveyTable, RATING_COLUMNS};

fn main() -> Result<(), pianoq::Error> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/ratings.example.csv").to_string());
    let table = SurveyTable::load(&path)?;
    let summary = aggregate_survey(&table)?;
    println!("{} participants", summary.participant_count);
    println!("{:>11} {:>7} {:>7} {:>7} {:>7}", "piano", "low", "middle", "high", "overall");
    for m in &summary.means {
        println!(
            "{:>11} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
            m.piano, m.low, m.middle, m.high, m.overall
        );
    }

    let corr = correlation_matrix(&table)?;
    println!("\nPearson correlation");
    print!("{:>8}", "");
    for c in RATING_COLUMNS {
        print!("{c:>8}");
    }
    println!();
    for (i, r) in RATING_COLUMNS.iter().enumerate() {
        print!("{r:>8}");
        for j in 0..RATING_COLUMNS.len() {
            print!("{:>8.4}", corr.get(i, j));
        }
        println!();
    }

    let profile = summary.to_profile()?;
    println!("\nprofile {}", profile.canonical_json());
    Ok(())
}
