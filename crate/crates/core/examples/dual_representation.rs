//! The monotone mean-variance risk as a dual supremum: the Fenchel gap is
//! zero at the gradient and nonnegative at every other dual element.

use condrisk::risk::{fenchel_gap, mmv, mmv_gradient, u_conjugate};
use condrisk::{DualElement, FiniteSpace, MmvParams, Partition, RandomVariable, Result};

fn main() -> Result<()> {
    let f = Partition::new(FiniteSpace::uniform(6)?, vec![0, 0, 0, 1, 1, 1])?;
    let x = RandomVariable::new(vec![0.0, 1.0, 6.0, -1.0, 2.0, 2.5]);
    let b = MmvParams::scalar(2.0)?;

    let y_star = DualElement::new(mmv_gradient(&x, &b, &f)?, &f)?;
    println!("V(x)            = {:?}", mmv(&x, &b, &f)?.values());
    println!("y* = V'(x)      = {:?}", y_star.y().values());
    println!("U*(y*)          = {:?}", u_conjugate(y_star.y(), &b, &f)?.values());
    println!("gap at y*       = {:?}", fenchel_gap(&x, &y_star, &b, &f)?.values());

    for w in [
        vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        vec![3.0, 1.0, 0.0, 0.2, 0.5, 2.0],
        vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
    ] {
        let y = DualElement::from_weights(&w.into(), &f)?;
        println!("gap at {:?} = {:?}", y.y().values(), fenchel_gap(&x, &y, &b, &f)?.values());
    }
    Ok(())
}
