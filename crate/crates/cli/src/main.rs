use std::path::PathBuf;
use std::process::ExitCode;

fn main() -> ExitCode {
    let env_out = std::env::var_os("KNLAB_OUT").map(PathBuf::from);
    let code = knlab::app::main_with(
        std::env::args_os(),
        env_out,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
