use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::{Cli, Command, Settings};

/// A user-facing error with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    pub const PARAMETER: u8 = 2;
    pub const CAPABILITY: u8 = 3;
    pub const VALIDATION: u8 = 4;

    pub fn param(msg: impl Into<String>) -> Self {
        Self {
            code: Self::PARAMETER,
            msg: msg.into(),
        }
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        Self {
            code: Self::CAPABILITY,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Self {
            code: Self::VALIDATION,
            msg: msg.into(),
        }
    }
}

impl From<cyclic_qsim::Error> for Failure {
    fn from(e: cyclic_qsim::Error) -> Self {
        use cyclic_qsim::Error as E;
        let code = match e {
            E::Capability(_) | E::Construction(_) => Self::CAPABILITY,
            E::Numerical(_) => Self::VALIDATION,
            _ => Self::PARAMETER,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::param(format!("I/O error: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Spectrum(a) => {
            s.apply_model(&a.model);
            s.set("n", &a.n);
            s.set("method", &a.method);
            s.set("format", &a.format);
            s.set("out", &a.out);
            commands::spectrum(&s)
        }
        Command::Sweep(a) => {
            s.apply_model(&a.model);
            s.set("n", &a.n);
            s.set("mode", &a.mode);
            s.set("plateau-tol", &a.plateau_tol);
            s.set("causal-tol", &a.causal_tol);
            s.set("format", &a.format);
            s.set("out", &a.out);
            if a.no_timing {
                s.set("timing", &Some("false".into()));
            }
            commands::sweep(&s)
        }
        Command::Simulate(a) => {
            s.apply_model(&a.model);
            s.set("n", &a.n);
            s.set("steps", &a.steps);
            s.set("seed", &a.seed);
            s.set("start", &a.start);
            s.set("mode", &a.mode);
            s.set("shots", &a.shots);
            s.set("out", &a.out);
            commands::simulate(&s)
        }
        Command::Validate => commands::validate(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
