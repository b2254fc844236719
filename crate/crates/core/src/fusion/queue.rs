use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A pending frame update tagged with its capture time and source stream.
#[derive(Debug, Clone)]
pub struct FrameUpdate<T> {
    pub timestamp: f64,
    pub stream: String,
    pub payload: T,
    seq: u64,
}

impl<T> PartialEq for FrameUpdate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for FrameUpdate<T> {}

impl<T> PartialOrd for FrameUpdate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for FrameUpdate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.timestamp
            .total_cmp(&other.timestamp)
            .then_with(|| self.stream.cmp(&other.stream))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Serializes updates from several streams into one grid: oldest timestamp
/// first, ties broken by stream id, then by arrival.
#[derive(Debug)]
pub struct FrameQueue<T> {
    heap: BinaryHeap<std::cmp::Reverse<FrameUpdate<T>>>,
    next_seq: u64,
}

impl<T> Default for FrameQueue<T> {
    fn default() -> Self {
        FrameQueue { heap: BinaryHeap::new(), next_seq: 0 }
    }
}

impl<T> FrameQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, timestamp: f64, stream: impl Into<String>, payload: T) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(std::cmp::Reverse(FrameUpdate { timestamp, stream: stream.into(), payload, seq }));
    }

    pub fn pop(&mut self) -> Option<FrameUpdate<T>> {
        self.heap.pop().map(|r| r.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_then_stream_then_arrival() {
        let mut q = FrameQueue::new();
        q.push(0.2, "b", 1);
        q.push(0.1, "b", 2);
        q.push(0.1, "a", 3);
        q.push(0.2, "b", 4);
        let order: Vec<i32> = std::iter::from_fn(|| q.pop()).map(|u| u.payload).collect();
        assert_eq!(order, vec![3, 2, 1, 4]);
    }
}
