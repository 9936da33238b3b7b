use std::fmt;

/// Collective operation categories tracked by [`CollectiveLog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollectiveKind {
    SumReduce,
    MaxReduce,
    SortRedistribute,
    Gather,
    Broadcast,
}

impl CollectiveKind {
    pub const ALL: [CollectiveKind; 5] = [
        CollectiveKind::SumReduce,
        CollectiveKind::MaxReduce,
        CollectiveKind::SortRedistribute,
        CollectiveKind::Gather,
        CollectiveKind::Broadcast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectiveKind::SumReduce => "sum_reduce",
            CollectiveKind::MaxReduce => "max_reduce",
            CollectiveKind::SortRedistribute => "sort_redistribute",
            CollectiveKind::Gather => "gather",
            CollectiveKind::Broadcast => "broadcast",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CollectiveStats {
    pub calls: u64,
    /// Elements contributed, summed over ranks.
    pub volume: u64,
    /// Largest single call volume.
    pub max_call_volume: u64,
}

/// Logical communication counters. Counts only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectiveLog {
    stats: [CollectiveStats; 5],
}

impl CollectiveLog {
    pub(crate) fn record(&mut self, kind: CollectiveKind, volume: usize) {
        let s = &mut self.stats[kind.index()];
        s.calls += 1;
        s.volume += volume as u64;
        s.max_call_volume = s.max_call_volume.max(volume as u64);
    }

    pub fn stats(&self, kind: CollectiveKind) -> CollectiveStats {
        self.stats[kind.index()]
    }

    /// `key: value` lines, one group per collective kind.
    pub fn report(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CollectiveLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for kind in CollectiveKind::ALL {
            let s = self.stats(kind);
            writeln!(f, "{}.calls: {}", kind.name(), s.calls)?;
            writeln!(f, "{}.volume: {}", kind.name(), s.volume)?;
            writeln!(f, "{}.max_call_volume: {}", kind.name(), s.max_call_volume)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_lists_every_kind() {
        let mut log = CollectiveLog::default();
        log.record(CollectiveKind::Gather, 10);
        log.record(CollectiveKind::Gather, 4);
        let text = log.report();
        assert!(text.contains("gather.calls: 2\n"));
        assert!(text.contains("gather.volume: 14\n"));
        assert!(text.contains("gather.max_call_volume: 10\n"));
        assert!(text.contains("sum_reduce.calls: 0\n"));
        assert_eq!(text.lines().count(), 15);
    }
}
