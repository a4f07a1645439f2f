//! Writes the seeded synthetic 10-ticker market used by the smoke run.
//!
//! ```text
//! cargo run -p folio-core --example make_synthetic -- data/synthetic
//! ```

use chrono::NaiveDate;
use folio_core::market_data::write_ohlcv_csv;
use folio_core::synthetic::SyntheticMarket;

fn main() -> folio_core::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/synthetic".into());
    let seed = std::env::args()
        .nth(2)
        .map_or(Ok(42), |s| s.parse())
        .expect("seed must be an integer");
    std::fs::create_dir_all(&out).map_err(|e| folio_core::Error::io(&out, e))?;
    let market = SyntheticMarket::new(
        10,
        NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2021, 8, 3).unwrap(),
        seed,
    );
    for s in market.generate()? {
        let path = std::path::Path::new(&out).join(format!("{}.csv", s.ticker));
        write_ohlcv_csv(&s, &path)?;
        println!("{} rows -> {}", s.rows.len(), path.display());
    }
    Ok(())
}
