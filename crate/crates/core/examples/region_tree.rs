//! Record points in a k-d region tree, split it around two seeds and dump
//! the leaves.

use fjspma::region::{GlobalTree, RegionBox};

fn main() -> anyhow::Result<()> {
    let mut tree: GlobalTree<()> = GlobalTree::new(RegionBox::new(vec![0, 0], vec![8, 8]));
    let points = [([1, 1], 10.0), ([2, 6], 30.0), ([6, 2], 12.0), ([7, 7], 40.0), ([1, 2], 9.0)];
    for (v, f) in points {
        tree.record(v.to_vec(), f, ())?;
    }
    let outcome = tree.divide_regions(&[&[1, 1], &[6, 2]])?;
    println!("{} splits, {} exhausted pairs", outcome.splits, outcome.exhausted.len());
    print!("{}", tree.dump());
    for leaf in tree.leaves() {
        println!("leaf {leaf} neighbours {:?}", tree.neighbors(leaf));
    }
    Ok(())
}
