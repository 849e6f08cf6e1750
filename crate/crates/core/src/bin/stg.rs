fn main() -> std::process::ExitCode {
    stg::cli::main()
}
