fn main() -> std::process::ExitCode {
    dispersia::cli::run()
}
