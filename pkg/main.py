"""querybridge 入口: python main.py <子命令> ..."""
from cli.main import main

if __name__ == "__main__":
    raise SystemExit(main())
