//! Offline accuracy and hallucination rates over labelled corpus files.

use std::collections::HashMap;
use std::io::BufRead;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub prediction: String,
    pub answer: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub id: String,
    pub answer: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleLabels {
    pub article_id: String,
    pub labels: Vec<u8>,
}

/// Splits combined question-answer records into the two keyed streams.
pub fn split_qa(records: &[QaRecord]) -> (Vec<PredictionRecord>, Vec<ReferenceRecord>) {
    records
        .iter()
        .map(|r| {
            (
                PredictionRecord {
                    id: r.id.clone(),
                    prediction: r.prediction.clone(),
                },
                ReferenceRecord {
                    id: r.id.clone(),
                    answer: r.answer.clone(),
                },
            )
        })
        .unzip()
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Fraction of references whose answer occurs, ignoring case, inside the
/// prediction with the same id.
pub fn offline_accuracy(predictions: &[PredictionRecord], references: &[ReferenceRecord]) -> Result<f64> {
    if references.is_empty() {
        return Err(Error::EmptyInput("reference records".into()));
    }
    if predictions.len() != references.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} references",
            predictions.len(),
            references.len()
        )));
    }
    let mut by_id = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.id.as_str(), p.prediction.as_str()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate prediction id {:?}", p.id)));
        }
    }
    let mut hits = 0usize;
    for r in references {
        let pred = by_id.get(r.id.as_str()).ok_or_else(|| Error::MissingId(r.id.clone()))?;
        if pred.to_lowercase().contains(&r.answer.to_lowercase()) {
            hits += 1;
        }
    }
    Ok(hits as f64 / references.len() as f64)
}

/// `1 − Σ factual / Σ sentences`, pooled over all articles.
pub fn offline_hallucination(articles: &[ArticleLabels]) -> Result<f64> {
    if articles.is_empty() {
        return Err(Error::EmptyInput("hallucination labels".into()));
    }
    let mut factual = 0u64;
    let mut total = 0u64;
    for a in articles {
        if a.labels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "article {:?} has no sentence labels",
                a.article_id
            )));
        }
        for &l in &a.labels {
            if l > 1 {
                return Err(Error::InvalidArgument(format!(
                    "article {:?} has label {l}, expected 0 or 1",
                    a.article_id
                )));
            }
            factual += l as u64;
        }
        total += a.labels.len() as u64;
    }
    Ok(1.0 - factual as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qa(id: &str, p: &str, a: &str) -> QaRecord {
        QaRecord {
            id: id.into(),
            prediction: p.into(),
            answer: a.into(),
        }
    }

    #[test]
    fn exact_predictions_score_one() {
        let recs = vec![qa("a", "Paris", "Paris"), qa("b", "Lyon", "Lyon")];
        let (p, r) = split_qa(&recs);
        assert_eq!(offline_accuracy(&p, &r).unwrap(), 1.0);
    }

    #[test]
    fn no_hits_score_zero() {
        let recs = vec![qa("a", "Rome", "Paris"), qa("b", "Oslo", "Lyon")];
        let (p, r) = split_qa(&recs);
        assert_eq!(offline_accuracy(&p, &r).unwrap(), 0.0);
    }

    #[test]
    fn matching_is_case_folded_and_keyed() {
        let preds = vec![
            PredictionRecord { id: "2".into(), prediction: "it is LYON".into() },
            PredictionRecord { id: "1".into(), prediction: "the answer is paris.".into() },
        ];
        let refs = vec![
            ReferenceRecord { id: "1".into(), answer: "Paris".into() },
            ReferenceRecord { id: "2".into(), answer: "Lyon".into() },
        ];
        assert_eq!(offline_accuracy(&preds, &refs).unwrap(), 1.0);
    }

    #[test]
    fn missing_id_is_an_error() {
        let preds = vec![PredictionRecord { id: "x".into(), prediction: "a".into() }];
        let refs = vec![ReferenceRecord { id: "y".into(), answer: "a".into() }];
        assert!(matches!(offline_accuracy(&preds, &refs), Err(Error::MissingId(_))));
    }

    #[test]
    fn hallucination_examples() {
        let art = |l: Vec<u8>| ArticleLabels { article_id: "a".into(), labels: l };
        assert_eq!(offline_hallucination(&[art(vec![1, 1, 1])]).unwrap(), 0.0);
        assert_eq!(offline_hallucination(&[art(vec![0, 0])]).unwrap(), 1.0);
        let h = offline_hallucination(&[art(vec![1, 1, 0, 1]), art(vec![1, 0])]).unwrap();
        assert!((h - 1.0 / 3.0).abs() < 1e-15);
        assert!(offline_hallucination(&[]).is_err());
        assert!(offline_hallucination(&[art(vec![])]).is_err());
        assert!(offline_hallucination(&[art(vec![2])]).is_err());
    }

    #[test]
    fn jsonl_reports_line_numbers() {
        let text = "{\"article_id\":\"a\",\"labels\":[1]}\n\nnot json\n";
        match read_jsonl::<ArticleLabels, _>(text.as_bytes()) {
            Err(Error::Record { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
