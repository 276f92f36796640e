use crate::mdp::State;

const ABSENT: usize = usize::MAX;

/// Indexed binary max-heap over states. Each state appears at most once;
/// pushing a queued state keeps the larger of the two priorities.
#[derive(Clone, Debug)]
pub struct MaxPriorityQueue {
    heap: Vec<(f64, State)>,
    position: Vec<usize>,
}

impl MaxPriorityQueue {
    pub fn new(num_states: usize) -> Self {
        MaxPriorityQueue { heap: Vec::new(), position: vec![ABSENT; num_states] }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, s: State) -> bool {
        self.position[s] != ABSENT
    }

    pub fn priority(&self, s: State) -> Option<f64> {
        let i = self.position[s];
        (i != ABSENT).then(|| self.heap[i].0)
    }

    pub fn push(&mut self, s: State, priority: f64) {
        let i = self.position[s];
        if i == ABSENT {
            self.heap.push((priority, s));
            let last = self.heap.len() - 1;
            self.position[s] = last;
            self.sift_up(last);
        } else if priority > self.heap[i].0 {
            self.heap[i].0 = priority;
            self.sift_up(i);
        }
    }

    pub fn pop(&mut self) -> Option<(State, f64)> {
        if self.heap.is_empty() {
            return None;
        }
        let (p, s) = self.heap.swap_remove(0);
        self.position[s] = ABSENT;
        if !self.heap.is_empty() {
            self.position[self.heap[0].1] = 0;
            self.sift_down(0);
        }
        Some((s, p))
    }

    pub fn clear(&mut self) {
        for &(_, s) in &self.heap {
            self.position[s] = ABSENT;
        }
        self.heap.clear();
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.heap[i].0 <= self.heap[parent].0 {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut largest = i;
            if l < n && self.heap[l].0 > self.heap[largest].0 {
                largest = l;
            }
            if r < n && self.heap[r].0 > self.heap[largest].0 {
                largest = r;
            }
            if largest == i {
                break;
            }
            self.swap(i, largest);
            i = largest;
        }
    }

    #[inline]
    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.position[self.heap[i].1] = i;
        self.position[self.heap[j].1] = j;
    }
}
