use super::records::SpellRecord;

/// Spells grouped by worker and sorted by year. A worker-year without a
/// record is read as non-employment.
#[derive(Debug, Clone, Default)]
pub struct PanelIndex {
    records: Vec<SpellRecord>,
    /// (start, end) ranges into `records`, one per worker, ordered by id.
    spans: Vec<(usize, usize)>,
}

impl PanelIndex {
    pub fn new(mut records: Vec<SpellRecord>) -> Self {
        records.sort_by(|a, b| a.worker_id.cmp(&b.worker_id).then(a.year.cmp(&b.year)));
        let mut spans = Vec::new();
        let mut start = 0;
        for i in 1..=records.len() {
            if i == records.len() || records[i].worker_id != records[start].worker_id {
                spans.push((start, i));
                start = i;
            }
        }
        Self { records, spans }
    }

    pub fn records(&self) -> &[SpellRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [SpellRecord] {
        &mut self.records
    }

    pub fn into_records(self) -> Vec<SpellRecord> {
        self.records
    }

    pub fn n_workers(&self) -> usize {
        self.spans.len()
    }

    pub fn worker(&self, w: usize) -> &[SpellRecord] {
        let (a, b) = self.spans[w];
        &self.records[a..b]
    }

    /// Position of a worker id among the workers.
    pub fn find(&self, worker_id: u64) -> Option<usize> {
        self.spans.binary_search_by_key(&worker_id, |&(a, _)| self.records[a].worker_id).ok()
    }

    pub fn at(&self, w: usize, year: i32) -> Option<&SpellRecord> {
        let spells = self.worker(w);
        spells.binary_search_by_key(&year, |s| s.year).ok().map(|i| &spells[i])
    }

    /// The record for `year`, or a synthesized non-employment record with the
    /// worker's demographics carried from the nearest observation.
    pub fn at_or_nonemployed(&self, w: usize, year: i32) -> SpellRecord {
        if let Some(s) = self.at(w, year) {
            return s.clone();
        }
        let spells = self.worker(w);
        let near = spells.iter().min_by_key(|s| (s.year - year).abs()).expect("worker without records");
        let age = (near.age as i32 + year - near.year).clamp(0, 255) as u8;
        SpellRecord::nonemployed(near.worker_id, year, age, near.female, near.education)
    }
}
