use gfe_core::gradcheck::{gradcheck_sweep, TOLERANCE};

use crate::args::GradcheckArgs;
use crate::exit::{CliResult, Code, Failure};

pub fn run(args: &GradcheckArgs) -> CliResult<()> {
    let checks = gradcheck_sweep(args.seed, args.reg_beta, args.corrupt_gradient)?;
    let mut worst: f64 = 0.0;
    for c in &checks {
        worst = worst.max(c.max_relative_error);
        let status = if c.passed() { "ok" } else { "FAIL" };
        println!(
            "{:<26} {:>6} params  max rel err {:.3e} (param {})  {status}",
            c.label, c.params, c.max_relative_error, c.worst_param
        );
    }
    println!("max relative error {worst:.3e} (tolerance {TOLERANCE:e})");
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Failure::new(Code::Gradcheck, format!("{failed} gradient check(s) failed")));
    }
    Ok(())
}
