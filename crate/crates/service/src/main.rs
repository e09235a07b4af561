fn main() -> std::process::ExitCode {
    gapscope::cli::main()
}
