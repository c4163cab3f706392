use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Agent, AgentId, MarketInstance};
use crate::value::{Value, SCALE};

/// Millimetres per foot, as a ratio `3048 / 10`.
pub const MM_PER_FOOT: f64 = 304.8;

/// One row of the water-rights CSV. `priority_rank` 1 is the most senior
/// right. Exactly one of `demand_mm_per_acre` and `volume_acre_ft` must be
/// present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaterRightRecord {
    pub right_id: String,
    pub priority_rank: u32,
    pub stream_id: String,
    pub stream_pos: u32,
    pub acreage: Value,
    pub value_per_acre: Value,
    #[serde(default)]
    pub demand_mm_per_acre: Option<Value>,
    #[serde(default)]
    pub volume_acre_ft: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IngestedRight {
    pub right_id: String,
    pub stream_id: String,
    pub stream_pos: u32,
    /// Whole acre-feet.
    pub volume: u64,
    pub units: usize,
    pub unit_value: Value,
    pub seller: bool,
}

#[derive(Clone, Debug)]
pub struct IngestedMarket {
    /// Complete compatibility; see [`super::build_geo_compatibility`].
    pub instance: MarketInstance,
    /// In input order.
    pub rights: Vec<IngestedRight>,
    pub total_volume: u64,
    pub seller_volume: u64,
}

impl IngestedMarket {
    pub fn stream_of(&self) -> BTreeMap<AgentId, String> {
        self.rights.iter().map(|r| (AgentId::from(r.right_id.as_str()), r.stream_id.clone())).collect()
    }
}

pub fn read_water_rights_csv<R: Read>(reader: R) -> Result<Vec<WaterRightRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn div_round_half_even(num: i128, den: i128) -> i128 {
    debug_assert!(num >= 0 && den > 0);
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

/// Whole acre-feet of a right: `acreage * mm / 304.8` or the direct volume,
/// rounded half to even.
fn volume_of(rec: &WaterRightRecord) -> std::result::Result<u64, String> {
    let micros = match (rec.demand_mm_per_acre, rec.volume_acre_ft) {
        (Some(mm), None) => {
            if mm.micros() <= 0 {
                return Err(format!("demand_mm_per_acre must be positive, got {mm}"));
            }
            // A * mm / 304.8 = A_micro * mm_micro * 10 / (3048 * 10^12)
            let num = i128::from(rec.acreage.micros()) * i128::from(mm.micros()) * 10;
            return Ok(div_round_half_even(num, 3048 * i128::from(SCALE) * i128::from(SCALE)) as u64);
        }
        (None, Some(v)) => v.micros(),
        (Some(_), Some(_)) => return Err("give only one of demand_mm_per_acre and volume_acre_ft".into()),
        (None, None) => return Err("missing demand_mm_per_acre or volume_acre_ft".into()),
    };
    if micros <= 0 {
        return Err("volume_acre_ft must be positive".into());
    }
    Ok(div_round_half_even(i128::from(micros), i128::from(SCALE)) as u64)
}

/// Turns water-rights records into a market.
///
/// Each right becomes `ceil(v / unit_size)` units valued at
/// `acreage * value_per_acre * unit_size / v` (rounded half to even to the
/// micro-unit). Rights are taken as sellers in seniority order until the
/// next one would push the cumulative volume above `delta * W`, `W` being
/// the total volume; every later right is a buyer.
pub fn ingest_water_rights(records: &[WaterRightRecord], unit_size: u32, delta: f64) -> Result<IngestedMarket> {
    let mut problems = Vec::new();
    if unit_size == 0 {
        problems.push("unit size must be positive".to_string());
    }
    if !(0.0..=1.0).contains(&delta) {
        problems.push(format!("delta = {delta} is outside [0, 1]"));
    }
    let mut volumes = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let before = problems.len();
        if rec.right_id.is_empty() {
            problems.push(format!("row {row}: empty right_id"));
        }
        if rec.acreage.micros() <= 0 {
            problems.push(format!("row {row} ({}): acreage must be positive, got {}", rec.right_id, rec.acreage));
        }
        if rec.value_per_acre.micros() <= 0 {
            problems.push(format!(
                "row {row} ({}): value_per_acre must be positive, got {}",
                rec.right_id, rec.value_per_acre
            ));
        }
        if problems.len() > before {
            volumes.push(0);
            continue;
        }
        let v = volume_of(rec).unwrap_or_else(|m| {
            problems.push(format!("row {row} ({}): {m}", rec.right_id));
            0
        });
        if v == 0 && problems.len() == before {
            problems.push(format!("row {row} ({}): volume rounds to 0 acre-feet", rec.right_id));
        }
        volumes.push(v);
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let total_volume: u64 = volumes.iter().sum();
    let threshold = delta * total_volume as f64;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| (records[i].priority_rank, i));
    let mut seller = vec![false; records.len()];
    let mut seller_volume = 0u64;
    for &i in &order {
        if (seller_volume + volumes[i]) as f64 > threshold + 1e-9 {
            break;
        }
        seller_volume += volumes[i];
        seller[i] = true;
    }

    let unit = u64::from(unit_size);
    let mut sellers = Vec::new();
    let mut buyers = Vec::new();
    let mut rights = Vec::with_capacity(records.len());
    for (pos, &i) in order.iter().enumerate() {
        let rec = &records[i];
        let v = volumes[i];
        let units = v.div_ceil(unit) as usize;
        let num = i128::from(rec.acreage.micros()) * i128::from(rec.value_per_acre.micros()) * i128::from(unit_size);
        let micros = div_round_half_even(num, i128::from(v) * i128::from(SCALE));
        let unit_value = Value::from_micros(
            i64::try_from(micros).map_err(|_| Error::Validation(vec![format!("row {}: unit value overflows", i + 1)]))?,
        );
        // all units of a right share one value, so either ordering holds
        let agent = Agent::new(rec.right_id.as_str(), (records.len() - pos) as u32, vec![unit_value; units]);
        if seller[i] {
            sellers.push(agent);
        } else {
            buyers.push(agent);
        }
        rights.push((
            i,
            IngestedRight {
                right_id: rec.right_id.clone(),
                stream_id: rec.stream_id.clone(),
                stream_pos: rec.stream_pos,
                volume: v,
                units,
                unit_value,
                seller: seller[i],
            },
        ));
    }
    rights.sort_by_key(|(i, _)| *i);
    let instance = MarketInstance::complete(sellers, buyers)?;
    Ok(IngestedMarket { instance, rights: rights.into_iter().map(|(_, r)| r).collect(), total_volume, seller_volume })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, rank: u32, acres: &str, per_acre: &str, mm: &str) -> WaterRightRecord {
        WaterRightRecord {
            right_id: id.into(),
            priority_rank: rank,
            stream_id: "main".into(),
            stream_pos: rank,
            acreage: acres.parse().unwrap(),
            value_per_acre: per_acre.parse().unwrap(),
            demand_mm_per_acre: Some(mm.parse().unwrap()),
            volume_acre_ft: None,
        }
    }

    fn direct(id: &str, rank: u32, acres: &str, per_acre: &str, vol: &str) -> WaterRightRecord {
        WaterRightRecord { demand_mm_per_acre: None, volume_acre_ft: Some(vol.parse().unwrap()), ..rec(id, rank, acres, per_acre, "1") }
    }

    #[test]
    fn volume_and_unit_count() {
        let m = ingest_water_rights(&[rec("r1", 1, "10", "100", "914.4")], 10, 1.0).unwrap();
        assert_eq!(m.rights[0].volume, 30);
        assert_eq!(m.rights[0].units, 3);
        // p = 10 * 100 / 30 per acre-foot, times 10
        assert_eq!(m.rights[0].unit_value, Value::from_micros(333_333_333));
    }

    #[test]
    fn value_per_acre_foot() {
        let m = ingest_water_rights(&[direct("r1", 1, "100", "500", "200")], 10, 1.0).unwrap();
        assert_eq!(m.rights[0].unit_value, Value::from_int(2500));
        let m = ingest_water_rights(&[direct("r1", 1, "100", "500", "200")], 1, 1.0).unwrap();
        assert_eq!(m.rights[0].unit_value, Value::from_int(250));
        assert_eq!(m.rights[0].units, 200);
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(div_round_half_even(5, 2), 2);
        assert_eq!(div_round_half_even(7, 2), 4);
        assert_eq!(div_round_half_even(8, 3), 3);
        // 1 acre at 152.4 mm is exactly half an acre-foot, then 3 halves
        assert!(ingest_water_rights(&[rec("r", 1, "1", "1", "152.4")], 5, 0.0).is_err());
        let m = ingest_water_rights(&[rec("r", 1, "3", "1", "152.4")], 5, 0.0).unwrap();
        assert_eq!(m.rights[0].volume, 2);
    }

    #[test]
    fn zero_delta_has_no_sellers() {
        let recs = [rec("a", 1, "10", "100", "914.4"), rec("b", 2, "5", "50", "304.8")];
        let m = ingest_water_rights(&recs, 5, 0.0).unwrap();
        assert!(m.instance.sellers().is_empty());
        assert_eq!(m.instance.buyers().len(), 2);
    }

    #[test]
    fn sellers_by_seniority_up_to_threshold() {
        // volumes 30, 10, 20 by rank; W = 60
        let recs = [
            direct("junior", 3, "1", "1", "20"),
            direct("senior", 1, "1", "1", "30"),
            direct("middle", 2, "1", "1", "10"),
        ];
        let m = ingest_water_rights(&recs, 10, 0.5).unwrap();
        let sellers: Vec<_> = m.instance.sellers().iter().map(|a| a.id.to_string()).collect();
        assert_eq!(sellers, ["senior"]);
        let m = ingest_water_rights(&recs, 10, 40.0 / 60.0).unwrap();
        assert_eq!(m.instance.sellers().len(), 2);
        assert_eq!(m.seller_volume, 40);
        assert!(m.instance.sellers()[0].seniority_rank > m.instance.sellers()[1].seniority_rank);
    }

    #[test]
    fn row_level_errors() {
        let mut bad = rec("x", 1, "0", "100", "914.4");
        bad.value_per_acre = Value::from_int(-1);
        let both = WaterRightRecord { volume_acre_ft: Some(Value::from_int(3)), ..rec("y", 2, "1", "1", "100") };
        let err = ingest_water_rights(&[rec("ok", 1, "1", "1", "304.8"), bad, both], 10, 0.5).unwrap_err();
        let Error::Validation(msgs) = err else { panic!() };
        assert!(msgs.iter().any(|m| m.starts_with("row 2") && m.contains("acreage")));
        assert!(msgs.iter().any(|m| m.starts_with("row 2") && m.contains("value_per_acre")));
        assert!(msgs.iter().any(|m| m.starts_with("row 3") && m.contains("only one")));
    }

    #[test]
    fn parses_csv() {
        let text = "right_id,priority_rank,stream_id,stream_pos,acreage,value_per_acre,demand_mm_per_acre\n\
                    r1,1,main,1,10,100,914.4\nr2,2,main,2,5, 50 ,304.8\n";
        let recs = read_water_rights_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].value_per_acre, Value::from_int(50));
        assert_eq!(recs[1].volume_acre_ft, None);
        let text = "right_id,priority_rank,stream_id,stream_pos,acreage,value_per_acre,volume_acre_ft\nr1,1,m,1,1,1,12\n";
        assert_eq!(read_water_rights_csv(text.as_bytes()).unwrap()[0].volume_acre_ft, Some(Value::from_int(12)));
        assert!(read_water_rights_csv("right_id\nx,y\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_round_up_bound(vols in prop::collection::vec(1u32..200, 1..12), unit in prop::sample::select(vec![5u32, 10, 20]),
                                       delta in 0.0f64..=1.0) {
            let recs: Vec<_> = vols.iter().enumerate()
                .map(|(i, v)| direct(&format!("r{i}"), (i as u32 * 7) % 5, "3", "11", &v.to_string()))
                .collect();
            let m = ingest_water_rights(&recs, unit, delta).unwrap();
            prop_assert!(m.instance.is_monotone());
            let w: u64 = vols.iter().map(|&v| u64::from(v)).sum();
            let units = m.instance.total_units() as u64;
            prop_assert!(units * u64::from(unit) >= w);
            prop_assert!(units * u64::from(unit) < w + recs.len() as u64 * u64::from(unit));
            prop_assert!(m.seller_volume as f64 <= delta * w as f64 + 1e-9);
        }
    }
}
