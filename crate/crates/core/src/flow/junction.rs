//! Junction state for grid nodes of the supply graph: the request queue,
//! availability tokens and the in-flight crossing reservation.
//!
//! Queues belong to the node, not the particle; they are handed to the next
//! occupant on every handover, re-expressed in its frame.

use crate::grid::{Dir, DirSet};
use std::collections::VecDeque;

/// One pending pull request: the direction the requester sits in and the exit
/// direction it wants, both in the owner's local frame.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Request {
    pub from: Dir,
    pub out: Dir,
    /// Bend flag the bubble will carry when it arrives on the junction.
    pub beta_in: u8,
}

#[derive(Clone, Default, Debug)]
pub struct JunctionState {
    /// FIFO of requests, at most one per incoming direction, so at most six.
    pub queue: VecDeque<Request>,
    /// Exit directions with a standing availability token, at most six.
    pub avail: DirSet,
    /// A granted crossing not yet completed: (incoming, outgoing).
    pub in_flight: Option<(Dir, Dir)>,
    /// The granted bubble has begun moving over this junction.
    pub in_flight_started: bool,
}

impl JunctionState {
    /// Enqueue unless a request from the same direction is already pending.
    /// Returns whether the request was added.
    pub fn push_request(&mut self, req: Request) -> bool {
        if self.queue.iter().any(|r| r.from == req.from) {
            return false;
        }
        self.queue.push_back(req);
        debug_assert!(self.queue.len() <= 6);
        true
    }

    pub fn remove_request_from(&mut self, from: Dir) {
        self.queue.retain(|r| r.from != from);
    }

    pub fn translate(&self, f: impl Fn(Dir) -> Dir + Copy) -> JunctionState {
        JunctionState {
            queue: self
                .queue
                .iter()
                .map(|r| Request { from: f(r.from), out: f(r.out), beta_in: r.beta_in })
                .collect(),
            avail: self.avail.map(f),
            in_flight: self.in_flight.map(|(a, b)| (f(a), f(b))),
            in_flight_started: self.in_flight_started,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_dedup_per_direction() {
        let mut j = JunctionState::default();
        for i in 0..6 {
            assert!(j.push_request(Request {
                from: Dir::from_index(i),
                out: Dir::from_index(i).opposite(),
                beta_in: 0,
            }));
        }
        // a seventh request repeats a direction and is refused
        assert!(!j.push_request(Request {
            from: Dir::from_index(3),
            out: Dir::from_index(0),
            beta_in: 1,
        }));
        assert_eq!(j.queue.len(), 6);
    }

    #[test]
    fn translation_maps_all_fields() {
        let mut j = JunctionState::default();
        j.push_request(Request { from: Dir::from_index(1), out: Dir::from_index(4), beta_in: 1 });
        j.avail.insert(Dir::from_index(4));
        j.in_flight = Some((Dir::from_index(1), Dir::from_index(4)));
        let t = j.translate(|d| d.rotate(2));
        assert_eq!(t.queue[0].from, Dir::from_index(3));
        assert_eq!(t.queue[0].out, Dir::from_index(0));
        assert!(t.avail.contains(Dir::from_index(0)));
        assert_eq!(t.in_flight, Some((Dir::from_index(3), Dir::from_index(0))));
    }
}
