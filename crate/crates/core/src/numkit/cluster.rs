//! Single-linkage clustering cut at a fixed height.

/// Labels `0..k` in order of first appearance. Two points share a label iff
/// they are joined by a chain of pairwise distances `<= cut`.
pub fn single_linkage_clusters(points: &[Vec<f64>], cut: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if super::stats::euclidean(&points[i], &points[j]) <= cut {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[i] = label[r];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        let p = vec![vec![0.0], vec![0.01], vec![5.0]];
        assert_eq!(single_linkage_clusters(&p, 0.1), vec![0, 0, 1]);
        assert_eq!(single_linkage_clusters(&vec![vec![1.0, 1.0]; 4], 0.1), vec![0; 4]);
    }

    // breadth-first components of the threshold graph
    fn components(p: &[Vec<f64>], cut: f64) -> Vec<usize> {
        let n = p.len();
        let mut lab = vec![usize::MAX; n];
        let mut k = 0;
        for s in 0..n {
            if lab[s] != usize::MAX {
                continue;
            }
            let mut queue = vec![s];
            lab[s] = k;
            while let Some(i) = queue.pop() {
                for j in 0..n {
                    let d: f64 = p[i].iter().zip(&p[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    if lab[j] == usize::MAX && d.sqrt() <= cut {
                        lab[j] = k;
                        queue.push(j);
                    }
                }
            }
            k += 1;
        }
        lab
    }

    proptest! {
        #[test]
        fn equals_graph_components(
            pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..200),
            cut in 0.01f64..0.3,
        ) {
            prop_assert_eq!(single_linkage_clusters(&pts, cut), components(&pts, cut));
        }
    }
}
