fn main() -> std::process::ExitCode {
    hierle::cli::main()
}
