/// Binary image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn inverted(&self) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|b| !b).collect() }
    }

    fn neighbours(&self, i: usize, conn: Connectivity, out: &mut Vec<usize>) {
        out.clear();
        let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if (dx == 0 && dy == 0) || (conn == Connectivity::Four && dx != 0 && dy != 0) {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                    out.push(ny as usize * self.width + nx as usize);
                }
            }
        }
    }

    /// Labels the set pixels: 0 is background, components are 1..=n in
    /// raster order of their first pixel.
    pub fn label(&self, conn: Connectivity) -> (Vec<u32>, u32) {
        let mut labels = vec![0u32; self.data.len()];
        let mut n = 0;
        let mut stack = Vec::new();
        let mut nb = Vec::with_capacity(8);
        for start in 0..self.data.len() {
            if !self.data[start] || labels[start] != 0 {
                continue;
            }
            n += 1;
            labels[start] = n;
            stack.push(start);
            while let Some(i) = stack.pop() {
                self.neighbours(i, conn, &mut nb);
                for &j in &nb {
                    if self.data[j] && labels[j] == 0 {
                        labels[j] = n;
                        stack.push(j);
                    }
                }
            }
        }
        (labels, n)
    }

    /// Largest component; ties go to the lower label.
    pub fn largest_component(&self, conn: Connectivity) -> Mask {
        let (labels, n) = self.label(conn);
        let mut sizes = vec![0usize; n as usize + 1];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        let best = (1..=n as usize).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
        Mask {
            width: self.width,
            height: self.height,
            data: labels.iter().map(|&l| best != 0 && l as usize == best).collect(),
        }
    }

    /// Background regions (4-connected) that do not touch the frame border,
    /// as labels on the inverted mask.
    pub fn holes(&self) -> (Vec<u32>, Vec<u32>) {
        let (labels, n) = self.inverted().label(Connectivity::Four);
        let mut on_border = vec![false; n as usize + 1];
        for x in 0..self.width {
            on_border[labels[x] as usize] = true;
            on_border[labels[(self.height - 1) * self.width + x] as usize] = true;
        }
        for y in 0..self.height {
            on_border[labels[y * self.width] as usize] = true;
            on_border[labels[y * self.width + self.width - 1] as usize] = true;
        }
        let ids = (1..=n).filter(|&k| !on_border[k as usize]).collect();
        (labels, ids)
    }

    pub fn hole_count(&self) -> usize {
        self.holes().1.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(w: usize, r0: f64, r1: f64) -> Mask {
        let c = w as f64 / 2.0;
        Mask::from_fn(w, w, |x, y| {
            let r = (x as f64 + 0.5 - c).hypot(y as f64 + 0.5 - c);
            r >= r0 && r <= r1
        })
    }

    #[test]
    fn connectivity_matters_for_diagonals() {
        let m = Mask::from_fn(4, 4, |x, y| x == y);
        assert_eq!(m.label(Connectivity::Four).1, 4);
        assert_eq!(m.label(Connectivity::Eight).1, 1);
    }

    #[test]
    fn ring_has_one_hole_disc_none() {
        assert_eq!(ring(40, 6.0, 12.0).hole_count(), 1);
        assert_eq!(ring(40, 0.0, 12.0).hole_count(), 0);
        assert_eq!(Mask::new(20, 20).hole_count(), 0);
    }

    #[test]
    fn largest_component_picks_bigger_blob() {
        let m = Mask::from_fn(30, 10, |x, y| (x < 3 && y < 3) || (x > 10 && x < 20 && y > 2 && y < 8));
        let big = m.largest_component(Connectivity::Eight);
        assert_eq!(big.count(), 45);
        assert!(!big.get(0, 0));
        assert_eq!(Mask::new(5, 5).largest_component(Connectivity::Eight).count(), 0);
    }

    #[test]
    fn labels_are_raster_ordered() {
        let m = Mask::from_fn(6, 1, |x, _| x != 2);
        let (l, n) = m.label(Connectivity::Four);
        assert_eq!(n, 2);
        assert_eq!(l, vec![1, 1, 0, 2, 2, 2]);
    }
}
