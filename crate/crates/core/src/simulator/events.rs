use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kinds of scheduled events. The declaration order is the tie-break
/// priority at equal timestamps: a pass ends before a computation that
/// finishes at the same instant, which in turn precedes a new pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    ContactEnd,
    ComputeDone,
    ContactStart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub satellite_id: u32,
}

impl SimEvent {
    fn key(&self) -> (EventKind, u32) {
        (self.kind, self.satellite_id)
    }
}

#[derive(Debug)]
struct Entry {
    event: SimEvent,
    seq: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so that the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .event
            .time
            .total_cmp(&self.event.time)
            .then_with(|| other.event.key().cmp(&self.event.key()))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Deterministic future-event set: `(time, kind, satellite id, insertion order)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    next_seq: u64,
    last_popped: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            last_popped: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, event: SimEvent) {
        debug_assert!(
            event.time >= self.last_popped,
            "event scheduled in the past: {event:?} < {}",
            self.last_popped
        );
        self.heap.push(Entry {
            event,
            seq: self.next_seq,
        });
        self.next_seq += 1;
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        let e = self.heap.pop()?.event;
        self.last_popped = e.time;
        Some(e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
