from rrt_lab.harness.cli import main

if __name__ == "__main__":
    main()
