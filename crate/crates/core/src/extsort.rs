//! External merge sort of `(f64, u64)` records under a memory budget.
//!
//! Records are sorted in memory until the buffer holds `budget` bytes, then
//! each sorted run is spilled to an anonymous temporary file and the runs are
//! k-way merged on read.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};

use crate::error::{BeamError, Result};

/// A sort record: a real key and an integer payload (usually a pair index).
pub type Record = (f64, u64);

const RECORD_BYTES: usize = 16;

/// Sort order of the records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    /// Key ascending, payload ascending on ties.
    KeyAscending,
    /// Key descending, payload descending on ties (the exact reverse of `KeyAscending`).
    KeyDescending,
    /// Payload ascending; the key is carried along.
    PayloadAscending,
}

impl SortOrder {
    fn cmp(self, a: &Record, b: &Record) -> Ordering {
        match self {
            SortOrder::KeyAscending => a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)),
            SortOrder::KeyDescending => b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)),
            SortOrder::PayloadAscending => a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)),
        }
    }
}

pub struct ExternalSorter {
    order: SortOrder,
    capacity: usize,
    buffer: Vec<Record>,
    runs: Vec<File>,
    len: u64,
}

impl ExternalSorter {
    /// `budget_bytes` bounds the in-memory buffer; at least 1024 records are
    /// always buffered.
    pub fn new(order: SortOrder, budget_bytes: usize) -> Self {
        let capacity = (budget_bytes / RECORD_BYTES).max(1024);
        ExternalSorter {
            order,
            capacity,
            buffer: Vec::new(),
            runs: Vec::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of runs spilled to disk so far.
    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn push(&mut self, rec: Record) -> Result<()> {
        self.buffer.push(rec);
        self.len += 1;
        if self.buffer.len() >= self.capacity {
            self.spill()?;
        }
        Ok(())
    }

    fn sort_buffer(&mut self) {
        let order = self.order;
        self.buffer.sort_unstable_by(|a, b| order.cmp(a, b));
    }

    fn spill(&mut self) -> Result<()> {
        self.sort_buffer();
        let file = tempfile::tempfile().map_err(|e| BeamError::io("<spill file>", e))?;
        let mut w = BufWriter::new(file);
        for (k, v) in self.buffer.drain(..) {
            w.write_all(&k.to_le_bytes())
                .and_then(|_| w.write_all(&v.to_le_bytes()))
                .map_err(|e| BeamError::io("<spill file>", e))?;
        }
        let mut file = w.into_inner().map_err(|e| BeamError::io("<spill file>", e.into_error()))?;
        file.seek(SeekFrom::Start(0)).map_err(|e| BeamError::io("<spill file>", e))?;
        self.runs.push(file);
        Ok(())
    }

    /// Consumes the sorter and yields all records in order.
    pub fn finish(mut self) -> Result<SortedRecords> {
        if self.runs.is_empty() {
            self.sort_buffer();
            return Ok(SortedRecords(Source::Memory(self.buffer.into_iter())));
        }
        if !self.buffer.is_empty() {
            self.spill()?;
        }
        let mut readers: Vec<BufReader<File>> = self.runs.into_iter().map(BufReader::new).collect();
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (run, r) in readers.iter_mut().enumerate() {
            if let Some(rec) = read_record(r)? {
                heap.push(HeapItem { rec, run, order: self.order });
            }
        }
        Ok(SortedRecords(Source::Merge { readers, heap }))
    }
}

fn read_record(r: &mut impl Read) -> Result<Option<Record>> {
    let mut buf = [0u8; RECORD_BYTES];
    match r.read_exact(&mut buf) {
        Ok(()) => {
            let k = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let v = u64::from_le_bytes(buf[8..].try_into().unwrap());
            Ok(Some((k, v)))
        }
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
        Err(e) => Err(BeamError::io("<spill file>", e)),
    }
}

struct HeapItem {
    rec: Record,
    run: usize,
    order: SortOrder,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.rec, &self.rec)
            .then(other.run.cmp(&self.run))
    }
}

/// Iterator over the sorted records.
pub struct SortedRecords(Source);

enum Source {
    Memory(std::vec::IntoIter<Record>),
    Merge {
        readers: Vec<BufReader<File>>,
        heap: BinaryHeap<HeapItem>,
    },
}

impl Iterator for SortedRecords {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.0 {
            Source::Memory(it) => it.next().map(Ok),
            Source::Merge { readers, heap } => {
                let top = heap.pop()?;
                match read_record(&mut readers[top.run]) {
                    Ok(Some(rec)) => heap.push(HeapItem { rec, ..top }),
                    Ok(None) => {}
                    Err(e) => return Some(Err(e)),
                }
                Some(Ok(top.rec))
            }
        }
    }
}
