//! CSV export of per-slot, per-user diagnostics.

use std::io::Write;

use serde::Serialize;

use super::mec::StepOutcome;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub episode: usize,
    pub t: usize,
    pub k: usize,
    pub alpha: f64,
    pub power_w: f64,
    pub task_bits: f64,
    pub gain: f64,
    pub rate_bps: f64,
    pub l_local: f64,
    pub l_off: f64,
    pub l_mec: f64,
    pub latency: f64,
    pub e_local: f64,
    pub e_off: f64,
    pub a_local: f64,
    pub h_local: f64,
    pub a_mec: f64,
    pub h_mec: f64,
    pub accuracy: f64,
    pub hallucination: f64,
    pub upload_capped: bool,
    pub omega_accuracy: f64,
    pub omega_hallucination: f64,
    pub omega_energy: f64,
    pub reward: f64,
}

pub fn trace_rows(episode: usize, out: &StepOutcome) -> Vec<TraceRow> {
    out.mlus
        .iter()
        .enumerate()
        .map(|(k, m)| TraceRow {
            episode,
            t: out.t,
            k,
            alpha: m.alpha,
            power_w: m.power_w,
            task_bits: m.task_bits,
            gain: m.gain,
            rate_bps: m.rate_bps,
            l_local: m.l_local,
            l_off: m.l_off,
            l_mec: m.l_mec,
            latency: m.latency,
            e_local: m.e_local,
            e_off: m.e_off,
            a_local: m.a_local,
            h_local: m.h_local,
            a_mec: m.a_mec,
            h_mec: m.h_mec,
            accuracy: m.accuracy,
            hallucination: m.hallucination,
            upload_capped: m.upload_capped,
            omega_accuracy: out.penalty.accuracy,
            omega_hallucination: out.penalty.hallucination,
            omega_energy: out.penalty.energy,
            reward: out.reward,
        })
        .collect()
}

pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(writer: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(writer),
        }
    }

    pub fn write_step(&mut self, episode: usize, out: &StepOutcome) -> Result<()> {
        for row in trace_rows(episode, out) {
            self.inner
                .serialize(row)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}
