use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

pub const RATINGS_HEADER: &str = "rater_id,clip_id,group_id,score,timestamp,trap_answer,gold_delta";

/// One ACR vote.
///
/// `trap_answer` and `gold_delta` describe the group submission the vote
/// belongs to: the option the rater picked for the trap item, and the
/// rater's gold score minus the gold ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub rater_id: String,
    pub clip_id: String,
    pub group_id: String,
    pub score: u8,
    pub timestamp: String,
    pub trap_answer: Option<i64>,
    pub gold_delta: Option<f64>,
}

pub fn read_ratings<R: Read>(reader: R) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let r: RatingRecord = rec?;
        if !(1..=5).contains(&r.score) {
            return Err(EvalError::InvalidScore(r.score));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn write_ratings<W: Write>(writer: W, ratings: &[RatingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in ratings {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_blanks() {
        let text = format!("{RATINGS_HEADER}\nr1,c1,g1,4,2020-04-01T10:00:00Z,2,0.5\nr2,c1,g2,3,t,,\n");
        let rs = read_ratings(text.as_bytes()).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].trap_answer, Some(2));
        assert_eq!(rs[1].gold_delta, None);
        let mut buf = Vec::new();
        write_ratings(&mut buf, &rs).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with(RATINGS_HEADER));
        assert_eq!(read_ratings(s.as_bytes()).unwrap(), rs);
    }

    #[test]
    fn rejects_out_of_range_score() {
        let text = format!("{RATINGS_HEADER}\nr1,c1,g1,6,t,,\n");
        assert!(matches!(read_ratings(text.as_bytes()), Err(EvalError::InvalidScore(6))));
    }
}
