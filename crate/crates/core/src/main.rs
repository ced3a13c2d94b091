fn main() -> std::process::ExitCode {
    locout::cli::run(std::env::args_os())
}
