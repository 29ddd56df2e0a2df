fn main() -> std::process::ExitCode {
    psimoyal_cli::main_entry()
}
