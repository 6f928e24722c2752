fn main() {
    eprintln!("camg CLI: not wired yet");
    std::process::exit(2);
}
