from pathchain.cli import main

main()
