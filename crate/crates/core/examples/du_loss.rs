//! The data-uncertainty head: expected probabilities under logit noise, the
//! Monte-Carlo loss and its pathwise gradient.

use calibforge::du_loss::{du_loss_grad, expected_prob, BinaryCollapse, DensityOutput, MCConfig};
use calibforge::nn::sigmoid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mc = MCConfig::new(100_000, 1);
    let mu = [1.0, 0.0];
    println!("mean logits {mu:?}; noise-free p = {:.4}", sigmoid(mu[0] - mu[1]));
    println!("sigma   E[p]    collapsed sigma");
    for s_raw in [-3.0f64, -1.0, 0.0, 0.5, 1.0] {
        let out = DensityOutput::new(mu, s_raw);
        let p = expected_prob(&out, &mc)?;
        let c = BinaryCollapse::from_density(&out);
        println!("{:>5.3}  {:.4}  {:>15.3}", out.sigma(), p[0], c.sigma_c);
    }

    // a confidently wrong prediction is cheaper with more noise, so the
    // gradient pushes sigma up; a correct one pushes it down
    let train_mc = MCConfig::new(32, 7);
    let out = DensityOutput::new([3.0, -1.0], 0.0);
    for (y, what) in [(0, "correct"), (1, "wrong")] {
        let g = du_loss_grad(&out, y, &train_mc)?;
        println!(
            "{what:<7} label: loss {:.4}  dL/dmu {:>+.4?}  dL/ds {:+.4}",
            g.loss, g.d_mu, g.d_s_raw
        );
    }
    Ok(())
}
