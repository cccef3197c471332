use std::process::ExitCode;

use padicdiff_cli::acceptance::criterion;

fn main() -> ExitCode {
    let mut ok = true;
    for id in 1..=8u8 {
        let c = criterion(id);
        ok &= c.pass;
        println!("criterion {}: {} {}", c.id, if c.pass { "PASS" } else { "FAIL" }, c.title);
        println!("    {}", c.detail);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
