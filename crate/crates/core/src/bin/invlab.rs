fn main() -> std::process::ExitCode {
    invlab::cli::main()
}
