//! Instance generation: the synthetic market family and water-rights
//! ingestion with stream-based compatibility.

mod geo;
mod synthetic;
mod water_rights;

pub use geo::{build_geo_compatibility, Segment, StreamTopology};
pub use synthetic::{gen_synthetic, SyntheticConfig};
pub use water_rights::{
    ingest_water_rights, read_water_rights_csv, IngestedMarket, IngestedRight, WaterRightRecord, MM_PER_FOOT,
};
