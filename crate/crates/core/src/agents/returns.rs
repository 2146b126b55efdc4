/// Discounted returns of a finished episode: `R_t = r_t + gamma * R_{t+1}`
/// with zero after the last step.
pub fn compute_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    bootstrapped_returns(rewards, 0.0, gamma)
}

/// n-step returns of a rollout segment whose tail is valued at `bootstrap`.
pub fn bootstrapped_returns(rewards: &[f64], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = bootstrap;
    for (o, &r) in out.iter_mut().zip(rewards).rev() {
        next = r + gamma * next;
        *o = next;
    }
    out
}
